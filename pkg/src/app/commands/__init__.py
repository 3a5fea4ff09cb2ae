"""
CLI subcommands. Each module exposes ``register(subparsers)``.
"""
from src.app.commands import evaluate, gen_data, report, sample, schedule, sweep, train, verify

COMMANDS = (gen_data, schedule, train, sample, evaluate, report, sweep, verify)
