"""mifkit: mixed identities, escape witnesses and super approximation at desk scale."""

__version__ = "0.1.0"
