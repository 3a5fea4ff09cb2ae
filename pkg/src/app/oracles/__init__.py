"""
Independent checks of the schedule, process and loss derivations.

Each module recomputes its quantity from first principles with plain numpy
and compares against the main implementation; none of them share helpers.
"""
