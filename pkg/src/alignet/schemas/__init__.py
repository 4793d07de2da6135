"""Msgspec models for files exchanged between stages."""
