from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np
from joblib import Parallel, delayed
from tqdm import tqdm

import src.Log


@dataclass(frozen=True)
class SweepTask:
    sample: int
    seed: np.random.SeedSequence
    label: str
    params: tuple = ()


class Scheduler:
    """Seeded sweep tasks evaluated serially or on a joblib worker pool.

    Every task owns a child of SeedSequence(seed), so results do not depend on the
    number of workers. Results come back sorted by their ``sort_key``.
    """

    def __init__(self, seed, jobs=1, logger=None):
        if jobs == 0 or jobs < -1:
            raise ValueError(f"jobs must be a positive integer or -1, got {jobs}")
        self.seed = int(seed)
        self.jobs = jobs
        self.logger = logger

    def tasks(self, count, params: Sequence[tuple] = None) -> List[SweepTask]:
        if params is not None and len(params) != count:
            raise ValueError(f"{len(params)} parameter sets for {count} tasks")
        children = np.random.SeedSequence(self.seed).spawn(count)
        return [SweepTask(sample=i, seed=child, label=f"{self.seed}:{i}",
                          params=tuple(params[i]) if params is not None else ())
                for i, child in enumerate(children)]

    def run(self, function: Callable, tasks: Sequence[SweepTask], description="sweep") -> list:
        if self.logger is not None:
            self.logger.log_info(f"Running {len(tasks)} {description} tasks with jobs={self.jobs}")
        src.Log.print_with_color(f"[>>>] {description}: {len(tasks)} samples", "blue")
        progress = tqdm(tasks, desc=description)
        if self.jobs == 1:
            results = [function(task) for task in progress]
        else:
            results = Parallel(n_jobs=self.jobs)(delayed(function)(task) for task in progress)
        return sorted(results, key=lambda r: r.sort_key)
