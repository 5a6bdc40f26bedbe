"""
Task Queue System

In-memory task queue that fans sweep points out over a bounded pool of
worker threads. Task ids carry the submission index so results can be
written in a deterministic order whatever the completion order.
"""
import logging
import threading
import time
from datetime import datetime
from enum import Enum
from typing import Any, Callable, Dict, List, Optional

logger = logging.getLogger(__name__)


class TaskStatus(Enum):
    """Task execution status"""
    PENDING = "pending"
    PROCESSING = "processing"
    COMPLETED = "completed"
    FAILED = "failed"


class Task:
    """One sweep point waiting for (or done with) its handler"""

    def __init__(self, index: int, task_type: str, data: Dict[str, Any]):
        self.index = index
        self.task_id = f"{task_type}-{index:05d}"
        self.task_type = task_type
        self.data = data
        self.status = TaskStatus.PENDING
        self.started_at = None
        self.completed_at = None
        self.result = None
        self.error = None
        self.error_type = None

    @property
    def wall_time(self) -> Optional[float]:
        if self.started_at and self.completed_at:
            return (self.completed_at - self.started_at).total_seconds()
        return None


class TaskQueue:
    """Bounded thread pool draining a list of pending tasks"""

    def __init__(self, max_workers: int = 2):
        if max_workers < 1:
            raise ValueError(f"max_workers must be at least 1, got {max_workers}")
        self.tasks: Dict[str, Task] = {}
        self.pending_tasks: List[str] = []
        self.max_workers = max_workers
        self.active_workers = 0
        self.lock = threading.Lock()
        self._next_index = 0

        # Task handlers
        self.handlers: Dict[str, Callable] = {}

    def register_handler(self, task_type: str, handler: Callable):
        """Register a handler function for a task type"""
        self.handlers[task_type] = handler
        logger.debug(f"Registered handler for task type: {task_type}")

    def add_task(self, task_type: str, data: Dict[str, Any]) -> str:
        """
        Add a new task to the queue

        Args:
            task_type: Type of task (e.g., 'response')
            data: Task parameters passed to the handler

        Returns:
            Task ID
        """
        with self.lock:
            task = Task(self._next_index, task_type, data)
            self._next_index += 1
            self.tasks[task.task_id] = task
            self.pending_tasks.append(task.task_id)

        logger.debug(f"Added task {task.task_id}")
        return task.task_id

    def get_task(self, task_id: str) -> Optional[Task]:
        """Get task by ID"""
        return self.tasks.get(task_id)

    def get_queue_status(self) -> Dict[str, Any]:
        """Get overall queue status"""
        with self.lock:
            status_counts = {}
            for task in self.tasks.values():
                status = task.status.value
                status_counts[status] = status_counts.get(status, 0) + 1

        return {
            'total_tasks': len(self.tasks),
            'pending_tasks': len(self.pending_tasks),
            'active_workers': self.active_workers,
            'max_workers': self.max_workers,
            'status_counts': status_counts,
        }

    def ordered_tasks(self) -> List[Task]:
        """All tasks in submission order"""
        return sorted(self.tasks.values(), key=lambda t: t.index)

    def run_all(self) -> List[Task]:
        """
        Process every pending task and block until all are done.

        A failing task is marked FAILED with its error; the others still run.

        Returns:
            All tasks in submission order
        """
        started = time.monotonic()
        workers = [
            threading.Thread(target=self._worker_loop, name=f"sweep-worker-{i}", daemon=True)
            for i in range(min(self.max_workers, max(1, len(self.pending_tasks))))
        ]
        for worker in workers:
            worker.start()
        for worker in workers:
            worker.join()

        status = self.get_queue_status()
        logger.info(
            f"Queue drained: {status['status_counts']} in {time.monotonic() - started:.2f}s "
            f"with {len(workers)} worker(s)"
        )
        return self.ordered_tasks()

    def _worker_loop(self):
        """Pull tasks until none are pending"""
        while True:
            with self.lock:
                if not self.pending_tasks:
                    return
                task_id = self.pending_tasks.pop(0)
            self._process_task(task_id)

    def _process_task(self, task_id: str):
        """Process a single task"""
        task = self.get_task(task_id)
        if not task:
            return

        with self.lock:
            self.active_workers += 1

        try:
            task.status = TaskStatus.PROCESSING
            task.started_at = datetime.utcnow()

            logger.debug(f"Processing task {task_id}")

            handler = self.handlers.get(task.task_type)
            if not handler:
                raise LookupError(f"No handler registered for task type: {task.task_type}")

            task.result = handler(task)
            task.status = TaskStatus.COMPLETED
            task.completed_at = datetime.utcnow()

        except Exception as e:
            task.status = TaskStatus.FAILED
            task.completed_at = datetime.utcnow()
            task.error = str(e)
            task.error_type = type(e).__name__

            logger.warning(f"Task {task_id} failed ({task.error_type}): {e}")

        finally:
            with self.lock:
                self.active_workers -= 1
