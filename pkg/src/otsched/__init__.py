"""Operating-room allocation as an under-allocation goal program.

Builds the model from an :class:`Instance`, solves it with the bundled simplex
(continuous) or branch-and-bound (integer) solver, and evaluates schedules.
"""

from .bnb import MilpSolution, NodeLimitError, solve_lexicographic, solve_milp
from .formulation import FormulationOptions, LpProblem, build_model, extract_allocation
from .instance import (
    Allocation,
    Department,
    Instance,
    InstanceError,
    RoomType,
    load_instance,
    paper_instance,
    save_instance,
    total_capacity_hours,
    total_demand_hours,
)
from .oracle import brute_force
from .report import ScheduleReport, evaluate_schedule, render_report, validate_schedule
from .simplex import BACKEND, IterationLimitError, LpSolution, solve_lp

__all__ = [
    "Allocation",
    "BACKEND",
    "Department",
    "FormulationOptions",
    "Instance",
    "InstanceError",
    "IterationLimitError",
    "LpProblem",
    "LpSolution",
    "MilpSolution",
    "NodeLimitError",
    "RoomType",
    "ScheduleReport",
    "brute_force",
    "build_model",
    "evaluate_schedule",
    "extract_allocation",
    "load_instance",
    "paper_instance",
    "render_report",
    "save_instance",
    "solve_lexicographic",
    "solve_lp",
    "solve_milp",
    "total_capacity_hours",
    "total_demand_hours",
    "validate_schedule",
]
