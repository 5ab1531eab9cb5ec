"""
Command services behind the CLI subcommands.
"""
