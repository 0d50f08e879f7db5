"""Distributed approximation algorithms on a CONGEST/LOCAL round simulator."""
