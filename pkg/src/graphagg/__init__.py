"""Graph aggregation: rules, axioms, meta-properties, modal correspondence and impossibility instances."""

__version__ = "0.1.0"
