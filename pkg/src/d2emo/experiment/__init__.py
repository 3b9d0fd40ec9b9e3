"""Benchmark problems, run orchestration, persistence, and statistics."""
