"""
Workflow Manager - Staged pipeline execution.
Runs ingest -> metrics -> panel -> fit -> report as dependent steps over a
shared context, and maps per-community work over a thread pool.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar
import time
import traceback

from .logging_system import LogManager, get_logger

T = TypeVar("T")
R = TypeVar("R")


class StepStatus(Enum):
    """Status of a workflow step."""
    PENDING = auto()
    IN_PROGRESS = auto()
    COMPLETED = auto()
    ERROR = auto()
    DISABLED = auto()


@dataclass
class StepResult:
    """Outcome of one step; data holds the files it wrote."""
    success: bool
    message: str = ""
    data: Any = None
    error: Optional[Exception] = None
    duration: float = 0.0


@dataclass
class WorkflowStep:
    """A named stage reading and extending the shared context."""
    id: str
    name: str
    function: Callable[[Dict[str, Any]], StepResult]
    enabled: bool = True
    dependencies: List[str] = field(default_factory=list)

    status: StepStatus = StepStatus.PENDING
    result: Optional[StepResult] = None

    def reset(self):
        self.status = StepStatus.PENDING if self.enabled else StepStatus.DISABLED
        self.result = None


class WorkflowManager:
    """
    Sequential step runner. An exception inside a step becomes a failed
    StepResult carrying the exception; the first failure stops the run.
    """

    def __init__(self, name: str = "Workflow", logger: Optional[LogManager] = None):
        self.name = name
        self.steps: Dict[str, WorkflowStep] = {}
        self.step_order: List[str] = []
        self.logger = logger or get_logger()
        self.on_step_complete: Optional[Callable[[WorkflowStep], None]] = None

    def add_step(self, step: WorkflowStep) -> None:
        """Append a step; its dependencies must already be registered."""
        if step.id in self.steps:
            raise ValueError(f"Step with ID '{step.id}' already exists")
        unknown = [dep for dep in step.dependencies if dep not in self.steps]
        if unknown:
            raise ValueError(f"Step '{step.id}' depends on unknown step '{unknown[0]}'")
        self.steps[step.id] = step
        self.step_order.append(step.id)

    def get_step(self, step_id: str) -> Optional[WorkflowStep]:
        return self.steps.get(step_id)

    def get_steps(self) -> List[WorkflowStep]:
        return [self.steps[step_id] for step_id in self.step_order]

    def reset(self) -> None:
        for step in self.steps.values():
            step.reset()

    def failed_step(self) -> Optional[WorkflowStep]:
        """The step that stopped the last run, if any."""
        return next((s for s in self.get_steps() if s.status == StepStatus.ERROR), None)

    def _execute(self, step: WorkflowStep, context: Dict[str, Any]) -> StepResult:
        step.status = StepStatus.IN_PROGRESS
        self.logger.info(f"Starting step: {step.name}", source="workflow")
        started = time.perf_counter()
        try:
            result = step.function(context)
        except Exception as e:
            result = StepResult(success=False, message=f"{type(e).__name__}: {e}", error=e)
            self.logger.debug(traceback.format_exc(), source="workflow")
        result.duration = time.perf_counter() - started

        step.result = result
        step.status = StepStatus.COMPLETED if result.success else StepStatus.ERROR
        seconds = f"{result.duration:.2f}"
        if result.success:
            self.logger.success(f"Completed: {step.name} - {result.message}", source="workflow", seconds=seconds)
        else:
            self.logger.error(f"Failed: {step.name} - {result.message}", source="workflow", seconds=seconds)
        if self.on_step_complete:
            self.on_step_complete(step)
        return result

    def run(self, context: Optional[Dict[str, Any]] = None) -> Dict[str, StepResult]:
        """
        Execute the enabled steps in registration order.

        Args:
            context: Dictionary shared by all steps (inputs and produced artifacts).

        Returns:
            Step id -> result for every step reached; steps after a failure are absent.
        """
        shared = {} if context is None else context
        outcomes: Dict[str, StepResult] = {}
        self.logger.info(f"Starting workflow '{self.name}'", source="workflow")

        for step in self.get_steps():
            if step.enabled:
                outcomes[step.id] = self._execute(step, shared)
            else:
                step.status = StepStatus.DISABLED
                outcomes[step.id] = StepResult(success=True, message="Step disabled")
            if step.status is StepStatus.ERROR:
                self.logger.error("Workflow stopped due to error", source="workflow")
                break

        done = sum(r.success for r in outcomes.values())
        self.logger.info(f"Workflow finished: {done}/{len(self.steps)} steps successful", source="workflow")
        return outcomes


def run_parallel(func: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> List[R]:
    """Map func over items with a thread pool; results keep input order."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(func, items))
