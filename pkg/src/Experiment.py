import math
import os
from datetime import datetime, timezone
from functools import partial

import numpy as np

import src.Log
from src.Config import DEFAULT_ANGLE_THETA, DEFAULT_FIXED_N, FIXED_N, ExperimentConfig
from src.ClusterSpectrum import multiplicity_census, single_cluster_scaling
from src.Errors import InfeasibleLayoutError, InvalidArgumentError
from src.LeastSquares import KAPPA_LIMIT, perturbation_experiment
from src.Linalg import singular_values
from src.Nodes import EQUISPACED, ClusterConfig, ClusterSpec, generate_multi_cluster, measure_stats, wrap_distance
from src.Scheduler import Scheduler, SweepTask
from src.Subspace import cluster_angle_matrix, union_spectrum_compare
from src.Utils import evenly_spaced_centers, fit_slope, log_grid, log_uniform
from src.Vandermonde import VandermondeSpec, build_vandermonde
from src.Writer import Series, SweepRecord, emit, write_yaml

DEFAULT_CENTER_OFFSET = 0.5


def _now():
    return datetime.now(timezone.utc).isoformat()


def _draw_N(rng, config: ExperimentConfig):
    return int(round(log_uniform(rng, *config.N_range)))


def _draw_width(rng, config: ExperimentConfig, N):
    h, h_range = config.shared_width
    if h is not None:
        return h
    if h_range is not None:
        return log_uniform(rng, *h_range)
    return log_uniform(rng, *config.Nh_range) / N


def cluster_centers(config: ExperimentConfig):
    if config.clusters[0].center is not None:
        return [c.center for c in config.clusters]
    return evenly_spaced_centers(len(config.clusters), DEFAULT_CENTER_OFFSET)


def build_cluster_config(config: ExperimentConfig, h) -> ClusterConfig:
    """Clusters of the configuration at their centers, every non-singleton with width h."""
    centers = cluster_centers(config)
    specs = [ClusterSpec(center=c, h=h if entry.s >= 2 else 0.0, s=entry.s, tau=entry.tau, layout=entry.layout)
             for c, entry in zip(centers, config.clusters)]
    if config.theta is not None:
        theta = config.theta
    elif len(centers) == 1:
        theta = math.pi
    else:
        gaps = [float(wrap_distance(a, b)) for i, a in enumerate(centers) for b in centers[i + 1:]]
        theta = min(gaps) - h
        if theta <= 0:
            raise InfeasibleLayoutError(f"clusters of width {h:.4g} overlap at the configured centers")
    return ClusterConfig(tuple(specs), theta)


def _flags(N, h, kappa=None, s=None, alpha=None):
    return {
        "eps_ok": N * h / 2 < 1,
        "kappa_ok": None if kappa is None else kappa < KAPPA_LIMIT,
        "alpha_ok": None if alpha is None else s * alpha <= 1,
    }


def angle_sample(config: ExperimentConfig, task: SweepTask) -> SweepRecord:
    if config.mode == FIXED_N:
        theta, Nh = task.params
        N = config.N or DEFAULT_FIXED_N
    else:
        Nh, N = task.params
        theta = config.theta or DEFAULT_ANGLE_THETA
    h = Nh / N
    first, second = config.clusters
    # the closest nodes of the two clusters are exactly theta apart
    specs = (ClusterSpec(center=0.0, h=h if first.s >= 2 else 0.0, s=first.s, layout=EQUISPACED),
             ClusterSpec(center=theta + h, h=h if second.s >= 2 else 0.0, s=second.s, layout=EQUISPACED))
    nodes = generate_multi_cluster(ClusterConfig(specs, theta), rng_seed=task.seed, tau_min=config.tau_min)
    beta = cluster_angle_matrix(nodes, N)[0].beta
    return SweepRecord(experiment="angles", sample=task.sample, seed=task.label, N=int(N), h=h, Nh=N * h,
                       theta=theta, s_profile=config.s_profile, beta=beta, alpha=beta,
                       **_flags(N, h, s=nodes.size, alpha=beta), timestamp=_now())


def spectrum_sample(config: ExperimentConfig, task: SweepTask) -> SweepRecord:
    parameter_seed, layout_seed = task.seed.spawn(2)
    rng = np.random.default_rng(parameter_seed)
    N = _draw_N(rng, config)
    h = _draw_width(rng, config, N)
    nodes = generate_multi_cluster(build_cluster_config(config, h), rng_seed=layout_seed, tau_min=config.tau_min)
    stats = measure_stats(nodes)

    spectrum = singular_values(build_vandermonde(VandermondeSpec(nodes, N)))
    sigma = tuple(float(v) for v in spectrum.values / math.sqrt(N))
    kappa = spectrum.condition_number
    if nodes.num_clusters >= 2:
        report = union_spectrum_compare(nodes, N)
        alpha, bound_ok = report.alpha, report.bounds_ok
    else:
        alpha = None
        bound_ok = single_cluster_scaling(nodes, N).upper_ok

    return SweepRecord(experiment="spectrum", sample=task.sample, seed=task.label, N=N, h=h, Nh=N * h,
                       theta=stats.theta if math.isfinite(stats.theta) else None, s_profile=config.s_profile,
                       alpha=alpha, kappa=kappa, bound_ok=bound_ok, sigma=sigma,
                       **_flags(N, h, kappa=kappa, s=nodes.size, alpha=alpha), timestamp=_now())


def leastsq_sample(config: ExperimentConfig, task: SweepTask) -> SweepRecord:
    parameter_seed, layout_seed, noise_seed = task.seed.spawn(3)
    rng = np.random.default_rng(parameter_seed)
    N = _draw_N(rng, config)
    h = _draw_width(rng, config, N)
    eps_noise = log_uniform(rng, *config.noise_eps_range)
    nodes = generate_multi_cluster(build_cluster_config(config, h), rng_seed=layout_seed, tau_min=config.tau_min)
    stats = measure_stats(nodes)

    result = perturbation_experiment(nodes, N, eps_noise, seed=noise_seed, complex_noise=config.complex_noise)
    return SweepRecord(experiment="leastsq", sample=task.sample, seed=task.label, N=N, h=h, Nh=N * h,
                       theta=stats.theta if math.isfinite(stats.theta) else None, s_profile=config.s_profile,
                       noise_eps=eps_noise, kappa=result.kappa, bound_ok=result.holder_ok,
                       delta_a=result.delta_a if result.defined else (),
                       **_flags(N, h, kappa=result.kappa), timestamp=_now())


def _fit_payload(fit):
    return {"slope": fit.slope, "intercept": fit.intercept, "residual_rms": fit.residual_rms, "count": fit.count}


def _component(name, index):
    return lambda record: getattr(record, name)[index]


class Experiment:
    def __init__(self, config: ExperimentConfig, jobs=1, logger=None):
        self.config = config
        self.logger = logger or src.Log.Logger(os.path.join(config.log_path, "app.log"))
        self.scheduler = Scheduler(config.seed, jobs, self.logger)

    def run(self):
        runners = {"angles": self.run_angles, "spectrum": self.run_spectrum, "leastsq": self.run_leastsq}
        config = self.config
        self.logger.log_info(f"Start {config.experiment} run '{config.label}': seed {config.seed}, "
                             f"rng {config.rng}, clusters {config.s_profile}")
        records = runners[config.experiment]()
        out_of_regime = sum(1 for r in records if not r.in_regime)
        if out_of_regime:
            self.logger.log_warning(f"{out_of_regime} of {len(records)} samples fall outside the valid regime")
        return records

    def angle_grid(self):
        config = self.config
        if config.mode == FIXED_N:
            grid = log_grid(*config.Nh_range, config.samples)
            return [(theta, Nh) for theta in config.theta_values for Nh in grid]
        values = (config.Nh,) if config.Nh is not None else config.Nh_values
        grid = sorted({int(round(N)) for N in log_grid(*config.N_range, config.samples)})
        return [(Nh, N) for Nh in values for N in grid]

    def run_angles(self):
        grid = self.angle_grid()
        tasks = self.scheduler.tasks(len(grid), grid)
        return self.scheduler.run(partial(angle_sample, self.config), tasks, "angles")

    def run_spectrum(self):
        tasks = self.scheduler.tasks(self.config.samples)
        return self.scheduler.run(partial(spectrum_sample, self.config), tasks, "spectrum")

    def run_leastsq(self):
        tasks = self.scheduler.tasks(self.config.samples)
        return self.scheduler.run(partial(leastsq_sample, self.config), tasks, "leastsq")

    def _groups(self, records):
        """(label, selected records, x field) per plotted series."""
        config = self.config
        if config.experiment == "angles":
            if config.mode == FIXED_N:
                return [(f"theta={theta:g}", [r for r in records if r.theta == theta], "Nh")
                        for theta in config.theta_values]
            values = (config.Nh,) if config.Nh is not None else config.Nh_values
            return [(f"Nh={Nh:g}", [r for r in records if math.isclose(r.Nh, Nh, rel_tol=1e-9)], "N")
                    for Nh in values]
        return [("in-regime", [r for r in records if r.in_regime], "Nh")]

    def summarize(self, records):
        config = self.config
        summary = {}
        if config.experiment == "angles":
            for label, selected, x_field in self._groups(records):
                entry = {}
                positive = [r for r in selected if r.beta is not None and r.beta > 0]
                try:
                    entry["fit"] = _fit_payload(fit_slope(positive, x_field, "beta"))
                except InvalidArgumentError as e:
                    self.logger.log_warning(f"No slope for {label}: {e}")
                if config.mode == FIXED_N and selected:
                    plateau = min(selected, key=lambda r: r.Nh).beta
                    entry["plateau"] = plateau
                    entry["plateau_times_theta"] = plateau * selected[0].theta
                summary[label] = entry
            return summary

        selected = [r for r in records if r.in_regime]
        name = "sigma" if config.experiment == "spectrum" else "delta_a"
        count = sum(config.multiplicities)
        for i in range(count):
            usable = [r for r in selected if len(getattr(r, name)) > i and getattr(r, name)[i] > 0]
            try:
                fit = fit_slope(usable, "Nh", _component(name, i))
                summary[f"{name}_{i + 1}"] = _fit_payload(fit)
            except InvalidArgumentError as e:
                self.logger.log_warning(f"No slope for {name}_{i + 1}: {e}")

        if config.experiment == "spectrum" and len(selected) >= 3:
            census = multiplicity_census(build_cluster_config(config, selected[0].h),
                                         [r.Nh for r in selected], [r.sigma for r in selected])
            summary["census"] = {"expected": list(census.expected), "measured": list(census.measured),
                                 "matches": census.matches}
        return summary

    def series(self, records):
        config = self.config
        if config.experiment == "angles":
            x_label = "Nh" if config.mode == FIXED_N else "N"
            series = [Series(label, tuple(getattr(r, x_field) for r in selected if r.beta and r.beta > 0),
                             tuple(r.beta for r in selected if r.beta and r.beta > 0))
                      for label, selected, x_field in self._groups(records)]
            return series, (x_label, "beta")

        name = "sigma" if config.experiment == "spectrum" else "delta_a"
        selected = [r for r in records if r.in_regime]
        count = max((len(getattr(r, name)) for r in selected), default=0)
        series = []
        for i in range(count):
            usable = [r for r in selected if len(getattr(r, name)) > i and getattr(r, name)[i] > 0]
            series.append(Series(f"{name}_{i + 1}", tuple(r.Nh for r in usable),
                                 tuple(getattr(r, name)[i] for r in usable)))
        y_label = "sigma_j / sqrt(N)" if name == "sigma" else "delta a_l"
        return series, ("Nh", y_label)

    def save(self, records, out_dir, fmt="csv"):
        summary = self.summarize(records)
        for key, value in summary.items():
            self.logger.log_info(f"{self.config.label} {key}: {value}")
        series, axes = self.series(records)
        paths = emit(records, fmt, out_dir, self.config.label, series=series, axes=axes)
        meta = {
            "experiment": self.config.experiment,
            "seed": self.config.seed,
            "rng": self.config.rng,
            "timestamp": _now(),
            "samples": len(records),
            "config": self.config.to_dict(),
            "summary": summary,
        }
        paths.append(write_yaml(os.path.join(out_dir, f"{self.config.label}-meta.yaml"), meta))
        for path in paths:
            self.logger.log_info(f"Wrote {path}")
        return paths


def run_angles(config: ExperimentConfig, jobs=1, logger=None):
    return Experiment(config, jobs, logger).run_angles()


def run_spectrum(config: ExperimentConfig, jobs=1, logger=None):
    return Experiment(config, jobs, logger).run_spectrum()


def run_leastsq(config: ExperimentConfig, jobs=1, logger=None):
    return Experiment(config, jobs, logger).run_leastsq()
