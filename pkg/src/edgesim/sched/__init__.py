"""Dataflow schedulers: the brute-force parallel design and the banked incremental one."""

from .core import Event, Scheduler, Stage, merge_ready, slot_rdys
from .incremental import IncrementalScheduler, SchedulerBank
from .parallel import ParallelScheduler, select_lowest

__all__ = [
    "Event", "Scheduler", "Stage", "merge_ready", "slot_rdys",
    "IncrementalScheduler", "SchedulerBank", "ParallelScheduler", "select_lowest",
]
