from .app import create_app
from .model import Earnings, PlaySession, TaskSlot, draw_task_set, quality_flag
from .store import DataStore

__all__ = [
    "DataStore",
    "Earnings",
    "PlaySession",
    "TaskSlot",
    "create_app",
    "draw_task_set",
    "quality_flag",
]
