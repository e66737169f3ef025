"""
Command line surface: argument parsing, experiment configs and report files.
"""
