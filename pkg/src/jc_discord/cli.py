"""``jc-discord`` command line front end.

Exit codes: 0 success, 1 validation failure, 2 I/O error, 3 bad parameters.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from . import analysis, closed_form, measurement_discord, oracle

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_PARAMS = 0, 1, 2, 3


class ParameterError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int = 8
    lambda0: float | None = None
    x: float | None = None
    tau_max: float | None = None
    tau_steps: int | None = None
    theta_steps: int | None = None
    phi_steps: int | None = None
    theta: float = math.pi / 2
    out: str | None = None
    plot: str | None = None
    seed: int = 0
    workers: int = 1

    def check(self) -> "RunConfig":
        if self.lambda0 is not None and self.x is not None:
            raise ParameterError("give either --lambda0 or --temp-ratio, not both")
        if self.n < 0:
            raise ParameterError("--n must be >= 0")
        for name in ("tau_steps", "theta_steps", "phi_steps"):
            v = getattr(self, name)
            if v is not None and v < 2:
                raise ParameterError(f"--{name.replace('_', '-')} must be >= 2")
        if self.tau_max is not None and not self.tau_max > 0:
            raise ParameterError("--tau-max must be > 0")
        if self.workers < 1:
            raise ParameterError("--workers must be >= 1")
        self.weights()
        return self

    def weights(self) -> closed_form.ThermalWeights:
        try:
            if self.x is not None:
                return closed_form.weights_from_temperature(self.x)
            lam = 0.5 if self.lambda0 is None else self.lambda0
            return closed_form.ThermalWeights.from_lambda0(lam)
        except ValueError as exc:
            raise ParameterError(str(exc)) from exc

    def tau_grid(self, beats: float, per_period: int) -> np.ndarray:
        """Uniform grid on ``[0, tau_max]``; defaults follow the sampling rule."""
        pred = analysis.predicted_beats(max(self.n, 1))
        tau_max = self.tau_max if self.tau_max is not None else beats * pred.beat_period
        steps = self.tau_steps
        if steps is None:
            steps = int(math.ceil(tau_max / pred.mean_period * per_period)) + 1
        return np.linspace(0.0, tau_max, steps)


# --- evaluation kernels (module level so worker processes can pickle them) ---

def _surface_rows(args):
    w, n, tau, theta = args
    ang = closed_form.evolution_angles(n, tau[:, None])
    return measurement_discord.discord_value(w, ang, theta[None, :])


def _dynamics_rows(args):
    w, n, tau = args
    ang = closed_form.evolution_angles(n, tau)
    m = measurement_discord.minimize_discord(w, ang)
    return np.column_stack([m.delta, m.theta_star, closed_form.inversion(w, ang)])


def _slice_rows(args):
    w, n, tau, theta = args
    return measurement_discord.discord_value(w, closed_form.evolution_angles(n, tau), theta)


def _parallel(fn: Callable, tau: np.ndarray, extra: tuple, workers: int, pre: tuple) -> np.ndarray:
    """Evaluate ``fn`` over contiguous tau chunks and stitch results in order."""
    parts = np.array_split(tau, max(1, workers * 4)) if workers > 1 else [tau]
    jobs = [pre + (p,) + extra for p in parts if p.size]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, jobs))
    else:
        results = [fn(j) for j in jobs]
    return np.concatenate(results, axis=0)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_csv(path: str | None, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(_fmt(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _plot(path: str, draw: Callable) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4.5))
    draw(ax)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


# --- commands ---------------------------------------------------------------

def cmd_surface(cfg: RunConfig) -> int:
    """Discord over a (tau, theta) grid, theta on [0, pi]."""
    w = cfg.weights()
    tau = cfg.tau_grid(beats=1.0, per_period=64)
    theta = np.linspace(0.0, math.pi, cfg.theta_steps or 181)
    d = _parallel(_surface_rows, tau, (theta,), cfg.workers, (w, cfg.n))
    tt, th = np.meshgrid(tau, theta, indexing="ij")
    _write_csv(cfg.out, ("tau", "theta", "discord"), (tt.ravel(), th.ravel(), d.ravel()))
    if cfg.plot:
        def draw(ax):
            mesh = ax.pcolormesh(tau, theta, d.T, shading="auto")
            ax.figure.colorbar(mesh, ax=ax, label="D (bits)")
            ax.set_xlabel(r"$\beta t$")
            ax.set_ylabel(r"$\theta$")
        _plot(cfg.plot, draw)
    return EXIT_OK


def _dynamics(cfg: RunConfig, beats: float = 4.25):
    w = cfg.weights()
    tau = cfg.tau_grid(beats=beats, per_period=128)
    res = _parallel(_dynamics_rows, tau, (), cfg.workers, (w, cfg.n))
    return tau, res[:, 0], res[:, 1], res[:, 2]


def cmd_dynamics(cfg: RunConfig) -> int:
    """Minimum discord, its optimal theta, and the inversion versus tau."""
    tau, delta, theta_star, inv = _dynamics(cfg)
    _write_csv(cfg.out, ("tau", "delta", "theta_star", "inversion"), (tau, delta, theta_star, inv))
    if cfg.plot:
        def draw(ax):
            ax.plot(tau, delta, color="tab:blue", lw=0.8, label=r"$\delta$")
            ax.plot(tau, inv, color="tab:red", lw=0.8, label=r"$\langle\sigma_z\rangle$")
            ax.set_xlabel(r"$\beta t$")
            ax.legend()
        _plot(cfg.plot, draw)
    return EXIT_OK


def cmd_slice(cfg: RunConfig) -> int:
    """Discord at one fixed theta versus tau."""
    w = cfg.weights()
    tau = cfg.tau_grid(beats=4.25, per_period=128)
    d = _parallel(_slice_rows, tau, (cfg.theta,), cfg.workers, (w, cfg.n))
    _write_csv(cfg.out, ("tau", "discord"), (tau, d))
    if cfg.plot:
        def draw(ax):
            ax.plot(tau, d, lw=0.8, label=fr"$\theta={cfg.theta:.4g}$")
            ax.set_xlabel(r"$\beta t$")
            ax.legend()
        _plot(cfg.plot, draw)
    return EXIT_OK


def cmd_beats(cfg: RunConfig) -> int:
    """Predicted against measured beat structure of the inversion and of delta."""
    if cfg.n < 1:
        raise ParameterError("beats need --n >= 1")
    pred = analysis.predicted_beats(cfg.n)
    if cfg.tau_max is not None and cfg.tau_max < 2 * pred.beat_period:
        raise ParameterError(
            f"--tau-max {cfg.tau_max:g} is shorter than two beat periods ({2 * pred.beat_period:.4g})"
        )
    tau, delta, _, inv = _dynamics(cfg)
    s_inv = analysis.SampledSignal(tau, inv)
    s_delta = analysis.SampledSignal(tau, delta)
    try:
        r_inv = analysis.beat_report(s_inv)
        r_delta = analysis.beat_report(s_delta)
    except analysis.InsufficientSpan as exc:
        raise ParameterError(f"insufficient span: {exc}") from exc
    osc_ratio = r_delta.mean_period / r_inv.mean_period
    beat_ratio = r_delta.beat_period / r_inv.beat_period

    out = sys.stdout
    out.write(f"n = {cfg.n}, lambda0 = {cfg.weights().lambda0:.6g}, tau in [0, {tau[-1]:.6g}], {tau.size} samples\n")
    out.write(f"{'':<24}{'predicted':>14}{'<sigma_z>':>14}{'delta':>14}\n")
    for label, p, a, b in (
        ("mean period", pred.mean_period, r_inv.mean_period, r_delta.mean_period),
        ("beat period", pred.beat_period, r_inv.beat_period, r_delta.beat_period),
        ("oscillations per beat", pred.oscillations_per_beat,
         r_inv.oscillations_per_beat, r_delta.oscillations_per_beat),
    ):
        out.write(f"{label:<24}{p:>14.6g}{a:>14.6g}{b:>14.6g}\n")
    out.write(f"large-n approximation: {pred.large_n_approx:g} oscillations per beat\n")
    out.write(f"period ratio delta/<sigma_z>: oscillation {osc_ratio:.4f}, beat {beat_ratio:.4f}\n")
    for row in analysis.maxima_alternation(s_delta, r_delta):
        out.write(
            f"delta beat {row['beat']}: tau [{row['start']:.4g}, {row['end']:.4g}), "
            f"{row['maxima']} maxima, alternation {row['alternation']:.2f}\n"
        )
    if cfg.out:
        header = ("signal", "mean_period", "beat_period", "oscillations_per_beat", "extrema_count",
                  "predicted_mean_period", "predicted_beat_period", "predicted_oscillations_per_beat")
        lines = [",".join(header)]
        for name, r in (("inversion", r_inv), ("delta", r_delta)):
            vals = (r.mean_period, r.beat_period, r.oscillations_per_beat)
            pvals = (pred.mean_period, pred.beat_period, pred.oscillations_per_beat)
            lines.append(",".join([name, *map(_fmt, vals), str(r.extrema_count), *map(_fmt, pvals)]))
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    if cfg.plot:
        def draw(ax):
            ax.plot(tau, delta, color="tab:blue", lw=0.8, label=r"$\delta$")
            ax.plot(tau, inv, color="tab:red", lw=0.8, label=r"$\langle\sigma_z\rangle$")
            for t in r_inv.envelope_minima:
                ax.axvline(t, color="tab:red", ls=":", lw=0.6)
            for t in r_delta.envelope_minima:
                ax.axvline(t, color="tab:blue", ls=":", lw=0.6)
            ax.set_xlabel(r"$\beta t$")
            ax.legend()
        _plot(cfg.plot, draw)
    return EXIT_OK


DEFAULT_VALIDATION_N = (0, 1, 2, 4, 8)
DEFAULT_VALIDATION_LAMBDA0 = (0.5, 0.75, 1.0)


def cmd_validate(cfg: RunConfig, explicit: frozenset = frozenset()) -> int:
    """Cross-check every analytic quantity against the numerical oracle."""
    ns = (cfg.n,) if "n" in explicit else DEFAULT_VALIDATION_N
    if "lambda0" in explicit or "x" in explicit:
        weights = (cfg.weights(),)
    else:
        weights = tuple(closed_form.ThermalWeights.from_lambda0(v) for v in DEFAULT_VALIDATION_LAMBDA0)
    tau = np.linspace(0.0, cfg.tau_max or 20.0, cfg.tau_steps or 64)
    all_ok = True
    kv = []
    for n in ns:
        for w in weights:
            rep = oracle.cross_validate(n, tau, w, theta_points=cfg.theta_steps or 19,
                                        seed=cfg.seed, workers=cfg.workers,
                                        phi_points=cfg.phi_steps or 37)
            all_ok &= rep.passed
            sys.stdout.write(f"n = {n}, lambda0 = {w.lambda0:.6g}\n{rep.to_text()}\n\n")
            prefix = f"n{n}.lambda0_{w.lambda0:.6g}."
            kv.extend(prefix + line for line in rep.to_keyvalue().splitlines())
    sys.stdout.write("VALIDATION " + ("PASS" if all_ok else "FAIL") + "\n")
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(kv) + f"\npassed={str(all_ok).lower()}\n")
    return EXIT_OK if all_ok else EXIT_FAIL


def cmd_predict(cfg: RunConfig) -> int:
    """Closed-form beat arithmetic for ``n`` photons."""
    try:
        p = analysis.predicted_beats(cfg.n)
    except ValueError as exc:
        raise ParameterError(str(exc)) from exc
    sys.stdout.write(
        f"n = {p.n}\n"
        f"mean period          exact {p.mean_period:.6f}   large-n {p.approx_mean_period:.6f}\n"
        f"beat period          exact {p.beat_period:.6f}   large-n {p.approx_beat_period:.6f}\n"
        f"oscillations/beat    exact {p.oscillations_per_beat:.6f}   large-n {p.large_n_approx:.6f}\n"
    )
    return EXIT_OK


COMMANDS = {
    "surface": cmd_surface,
    "dynamics": cmd_dynamics,
    "slice": cmd_slice,
    "beats": cmd_beats,
    "validate": cmd_validate,
    "predict": cmd_predict,
}

# flag name -> (RunConfig field, type)
FLAGS = {
    "n": ("n", int),
    "lambda0": ("lambda0", float),
    "temp-ratio": ("x", float),
    "tau-max": ("tau_max", float),
    "tau-steps": ("tau_steps", int),
    "theta-steps": ("theta_steps", int),
    "phi-steps": ("phi_steps", int),
    "theta": ("theta", float),
    "out": ("out", str),
    "plot": ("plot", str),
    "seed": ("seed", int),
    "workers": ("workers", int),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAMS, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    for flag, (_, typ) in FLAGS.items():
        if flag in ("lambda0", "temp-ratio"):
            continue
        common.add_argument(f"--{flag}", type=typ, default=None)
    temp = common.add_mutually_exclusive_group()
    temp.add_argument("--lambda0", type=float, default=None, help="ground-state population")
    temp.add_argument("--temp-ratio", type=float, default=None, help="omega / kT")
    common.add_argument("--config", default=None, help="key=value file; flags take precedence")

    parser = _Parser(prog="jc-discord", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").strip().splitlines()[0])
    return parser


def read_config_file(path: str) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("_", "-")
            if key not in FLAGS:
                raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def make_config(ns: argparse.Namespace) -> tuple[RunConfig, frozenset]:
    """Merge config file and flags. Also returns the fields set explicitly."""
    file_values = read_config_file(ns.config) if ns.config else {}
    fields = {}
    for flag, (field_name, typ) in FLAGS.items():
        v = getattr(ns, flag.replace("-", "_"))
        if v is None and flag in file_values:
            try:
                v = typ(file_values[flag])
            except ValueError as exc:
                raise ParameterError(f"bad value for {flag}: {file_values[flag]!r}") from exc
        if v is not None:
            fields[field_name] = v
    return replace(RunConfig(), **fields).check(), frozenset(fields)


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg, explicit = make_config(ns)
        if ns.command == "validate":
            return cmd_validate(cfg, explicit)
        return COMMANDS[ns.command](cfg)
    except ParameterError as exc:
        sys.stderr.write(f"jc-discord: {exc}\n")
        return EXIT_PARAMS
    except OSError as exc:
        sys.stderr.write(f"jc-discord: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
