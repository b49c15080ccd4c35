"""Complaint analytics: ingestion, features, learners, metrics and topic models."""

__version__ = "0.1.0"
