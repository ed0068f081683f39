"""Majorana braiding and projective-measurement simulator."""
