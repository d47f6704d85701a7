"""Interference of charged particles in potential landscapes."""
