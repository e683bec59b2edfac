"""
RIS phase-pattern generation and design
"""

from .schedules import PhaseSchedule, random_schedule, fixed_schedule, export_schedule, import_schedule
from .designer import (
    OptimizerOptions,
    OptimizationResult,
    mutual_coherence,
    design_objective,
    optimal_xi,
    optimize_schedule,
)

__all__ = [
    'PhaseSchedule',
    'random_schedule',
    'fixed_schedule',
    'export_schedule',
    'import_schedule',
    'OptimizerOptions',
    'OptimizationResult',
    'mutual_coherence',
    'design_objective',
    'optimal_xi',
    'optimize_schedule',
]
