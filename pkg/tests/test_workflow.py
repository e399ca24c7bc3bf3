"""
Unit tests for the workflow runner and the parallel map.
"""

import sys
import threading
import time
import unittest
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from core.logging_system import LogManager
from core.workflow import StepResult, StepStatus, WorkflowManager, WorkflowStep, run_parallel


def _quiet_logger():
    logger = LogManager("TestWorkflow")
    logger.enable_console(False)
    return logger


class TestWorkflowManager(unittest.TestCase):
    """Tests for WorkflowManager class."""

    def setUp(self):
        self.workflow = WorkflowManager("test", logger=_quiet_logger())

    def test_steps_share_context(self):
        """Test steps share one context."""
        def produce(context):
            context["rows"] = [1, 2, 3]
            return StepResult(True, "produced")

        def consume(context):
            return StepResult(True, data=sum(context["rows"]))

        self.workflow.add_step(WorkflowStep("produce", "Produce", produce))
        self.workflow.add_step(WorkflowStep("consume", "Consume", consume, dependencies=["produce"]))
        results = self.workflow.run()

        self.assertEqual(results["consume"].data, 6)
        self.assertEqual([s.status for s in self.workflow.get_steps()],
                         [StepStatus.COMPLETED, StepStatus.COMPLETED])

    def test_error_stops_the_run(self):
        """Test a raising step stops the run."""
        calls = []

        def fail(context):
            raise ValueError("bad archive")

        self.workflow.add_step(WorkflowStep("ingest", "Ingest", fail))
        self.workflow.add_step(WorkflowStep("metrics", "Metrics", lambda c: calls.append(1) or StepResult(True),
                                            dependencies=["ingest"]))
        results = self.workflow.run({})

        self.assertFalse(results["ingest"].success)
        self.assertIsInstance(results["ingest"].error, ValueError)
        self.assertEqual(results["ingest"].message, "ValueError: bad archive")
        self.assertNotIn("metrics", results)
        self.assertEqual(calls, [])
        self.assertEqual(self.workflow.get_step("ingest").status, StepStatus.ERROR)
        self.assertIs(self.workflow.failed_step(), self.workflow.get_step("ingest"))

    def test_disabled_dependency_is_skipped_over(self):
        """Test a disabled dependency does not block its dependents."""
        self.workflow.add_step(WorkflowStep("a", "A", lambda c: StepResult(False, "not run"), enabled=False))
        self.workflow.add_step(WorkflowStep("b", "B", lambda c: StepResult(True), dependencies=["a"]))
        results = self.workflow.run()
        self.assertEqual(results["a"].message, "Step disabled")
        self.assertTrue(results["b"].success)

    def test_invalid_steps(self):
        """Test duplicate ids and unknown dependencies raise."""
        self.workflow.add_step(WorkflowStep("a", "A", lambda c: StepResult(True)))
        with self.assertRaises(ValueError):
            self.workflow.add_step(WorkflowStep("a", "A again", lambda c: StepResult(True)))
        with self.assertRaises(ValueError):
            self.workflow.add_step(WorkflowStep("b", "B", lambda c: StepResult(True), dependencies=["z"]))

    def test_reset(self):
        """Test reset returns steps to pending."""
        self.workflow.add_step(WorkflowStep("a", "A", lambda c: StepResult(True)))
        self.workflow.run()
        self.workflow.reset()
        self.assertEqual(self.workflow.get_step("a").status, StepStatus.PENDING)
        self.assertIsNone(self.workflow.get_step("a").result)

    def test_step_callback(self):
        """Test the step completion callback."""
        seen = []
        self.workflow.on_step_complete = lambda step: seen.append(step.id)
        self.workflow.add_step(WorkflowStep("a", "A", lambda c: StepResult(True)))
        self.workflow.run()
        self.assertEqual(seen, ["a"])


class TestRunParallel(unittest.TestCase):
    """Tests for run_parallel."""

    def test_order_is_kept(self):
        """Test parallel results keep input order."""
        def slow_square(k):
            time.sleep(0.001 * (10 - k))
            return k * k

        self.assertEqual(run_parallel(slow_square, range(10), jobs=4), [k * k for k in range(10)])

    def test_serial_path(self):
        """Test one job runs on the calling thread."""
        threads = set()

        def record(k):
            threads.add(threading.get_ident())
            return k

        self.assertEqual(run_parallel(record, [3, 1, 2], jobs=1), [3, 1, 2])
        self.assertEqual(threads, {threading.get_ident()})
        self.assertEqual(run_parallel(record, [], jobs=8), [])


if __name__ == '__main__':
    unittest.main()
