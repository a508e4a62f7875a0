"""Command-line entry points for binary-maximin."""
