"""Command-line experiment runner.

Every subcommand reads an optional flat configuration file (one
``key = value`` per line, ``#`` starts a comment, lists are comma
separated, vectors in ``k_vectors`` are separated by ``;``) and writes CSV
to ``--out`` or standard output.  ``--set key=value`` overrides single
keys after the file is read.

Exit codes: 0 success, 2 configuration or scope error, 3 unresolved
quadrature.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import (CONVERGE_HEADER, PolarEvalConfig, pointwise_convergence_study,
                       reconstruction_benchmark)
from .dispersion import DispersionKind, DispersionSpec
from .errors import ConfigurationError, DomainError, ResolutionError
from .initial_data import BUILTINS, builtin, load_tabulated
from .operators import Regularizer, default_directions, reconstruct
from .spectral import Grid1D
from .stationary_phase import (FRESNEL_LIMIT, OscillatoryIntegralSpec, SphereQuadrature,
                               TEST_FUNCTIONS, make_test_function, min_theta_nodes,
                               oscillatory_integral, stationary_phase_functional)

log = logging.getLogger("profilewave")

SP_HEADER = ("d", "N", "re", "im", "abs_error_vs_phi_kappa", "nodes")
FRESNEL_HEADER = ("beta", "N", "re", "im", "abs_error")
BENCH_HEADER = ("epsilon", "recon_wall_ms", "recon_peak_mem_est", "grid_cells_required",
                "grid_wall_ms", "grid_estimated")
RECONSTRUCT_HEADER = ("x_coord", "re", "im")


@dataclass
class ExperimentConfig:
    """All recognised configuration keys with their defaults."""

    d: int = 1
    dispersion: str = "zero"
    c: float = 1.0
    d0: float = 1.0
    b3: float = 0.5
    rho: float = 0.25
    tau: float = 1.0
    epsilons: list = field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05])
    k_norms: list = field(default_factory=lambda: [1.0])
    k_direction: Optional[list] = None
    k_vectors: Optional[list] = None
    initial_data: str = "default"
    support_radius: Optional[float] = None
    z_half_width: float = 512.0
    z_nodes: int = 8192
    quad_scale: float = 1.0
    n_azimuth: int = 32
    threads: int = 1
    # stationary phase and oscillatory integral
    n_list: list = field(default_factory=lambda: [1e2, 1e3, 1e4])
    test_function: str = "cap2"
    beta: float = 0.3
    fresnel_n_list: list = field(default_factory=lambda: [1e4, 1e5, 1e6])
    # benchmark
    dx: float = 0.25
    grid_cap: int = 2**22
    repeats: int = 3
    # reconstruct
    epsilon: float = 0.2
    ray_direction: Optional[list] = None
    n_samples: int = 513
    r_min: Optional[float] = None
    r_max: Optional[float] = None

    def validate(self):
        if self.d not in (1, 2, 3):
            raise ConfigurationError(f"d: dimension must be 1, 2 or 3, got {self.d}")
        DispersionKind.parse(self.dispersion)
        for name in ("c", "d0", "rho", "tau", "z_half_width", "dx", "epsilon", "quad_scale"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name}: must be positive, got {value}")
        if any(not (e > 0) for e in self.epsilons):
            raise ConfigurationError("epsilons: all values must be positive")
        for name in ("n_list", "fresnel_n_list"):
            if any(not (n > 0) for n in getattr(self, name)):
                raise ConfigurationError(f"{name}: all values must be positive")
        if self.threads < 1:
            raise ConfigurationError("threads: must be >= 1")
        if self.z_nodes < 16:
            raise ConfigurationError("z_nodes: must be >= 16")
        if self.test_function not in TEST_FUNCTIONS:
            raise ConfigurationError(
                f"test_function: unknown {self.test_function!r}; known: {', '.join(TEST_FUNCTIONS)}")
        for name in ("k_direction", "ray_direction"):
            vec = getattr(self, name)
            if vec is not None and (len(vec) != self.d or not np.linalg.norm(vec) > 0):
                raise ConfigurationError(f"{name}: need a nonzero vector with {self.d} components")
        if self.k_vectors is not None:
            for vec in self.k_vectors:
                if len(vec) != self.d:
                    raise ConfigurationError(f"k_vectors: each vector needs {self.d} components")
        if not self.initial_data.startswith("file:") and self.initial_data not in BUILTINS:
            raise ConfigurationError(
                f"initial_data: unknown {self.initial_data!r}; use one of "
                f"{', '.join(sorted(BUILTINS))} or file:<path>")
        return self

    # derived objects

    def dispersion_spec(self, epsilon=None) -> DispersionSpec:
        kind = DispersionKind.parse(self.dispersion)
        eps = self.epsilons[-1] if epsilon is None else epsilon
        if kind is DispersionKind.ZERO:
            return DispersionSpec.zero(self.c, eps)
        if kind is DispersionKind.CUBIC:
            return DispersionSpec(kind, self.b3, c=self.c, d0=self.d0, epsilon=eps)
        return DispersionSpec.full_sqrt(self.c, self.d0, eps)

    def k_list(self) -> list:
        if self.k_vectors is not None:
            return [np.asarray(v, dtype=float) for v in self.k_vectors]
        direction = np.eye(self.d)[0] if self.k_direction is None else np.asarray(self.k_direction)
        direction = direction / np.linalg.norm(direction)
        return [float(n) * direction for n in self.k_norms]

    def z_grid(self) -> Grid1D:
        return Grid1D.periodic(-self.z_half_width, self.z_half_width, self.z_nodes)

    def polar(self) -> PolarEvalConfig:
        return PolarEvalConfig(self.quad_scale, self.n_azimuth)

    def initial(self):
        if self.initial_data.startswith("file:"):
            return load_tabulated(self.initial_data[5:], self.d, self.support_radius)
        return builtin(self.initial_data, self.d)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_VECTOR_LISTS = {"k_vectors"}


def _coerce(key: str, raw: str):
    f = _FIELDS[key]
    default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
    raw = raw.strip()
    if key in _VECTOR_LISTS:
        return [[float(x) for x in part.split(",")] for part in raw.split(";") if part.strip()]
    kind = f.type
    if "list" in str(kind) or isinstance(default, list):
        return [float(x) for x in raw.split(",") if x.strip()]
    if raw.lower() == "none" and "Optional" in str(kind):
        return None
    if "int" in str(kind) and "float" not in str(kind):
        value = float(raw)
        if value != int(value):
            raise ValueError(f"expected an integer, got {raw}")
        return int(value)
    if "float" in str(kind):
        return float(raw)
    return raw


def _apply(cfg: ExperimentConfig, key: str, raw: str, where: str):
    key = key.strip()
    if key not in _FIELDS:
        raise ConfigurationError(f"{where}: unknown key {key!r}")
    try:
        setattr(cfg, key, _coerce(key, raw))
    except ValueError as exc:
        raise ConfigurationError(f"{where}: bad value for {key!r}: {exc}") from None


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse ``key = value`` lines into an :class:`ExperimentConfig`."""
    cfg = ExperimentConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        _apply(cfg, key, raw, f"{source}:{lineno}")
    return cfg


def load_config(path: Optional[str], overrides=()) -> ExperimentConfig:
    if path is None:
        cfg = ExperimentConfig()
    else:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
        cfg = parse_config(text, str(p))
    for item in overrides:
        if "=" not in item:
            raise ConfigurationError(f"--set {item!r}: expected key=value")
        key, raw = item.split("=", 1)
        _apply(cfg, key, raw, f"--set {key.strip()}")
    return cfg.validate()


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(fh, header, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


# subcommands; each returns (header, rows, plot_fn)

def run_converge(cfg: ExperimentConfig):
    spec = cfg.dispersion_spec()
    reg = Regularizer(cfg.rho, cfg.d)
    report = pointwise_convergence_study(
        cfg.initial(), spec, reg, cfg.k_list(), cfg.tau, cfg.epsilons,
        z_grid=cfg.z_grid(), cfg=cfg.polar(), threads=cfg.threads)
    for k, rate in report.fitted_rates().items():
        log.info("k=%s: fitted log-log slope %.3f (informational)", k, rate)
    return CONVERGE_HEADER, list(report.rows())


def run_stationary_phase(cfg: ExperimentConfig):
    rows = []
    phi = make_test_function(cfg.test_function, cfg.d)
    target = complex(phi(phi.kappa[None, :])[0])
    for n_osc in cfg.n_list:
        if cfg.d == 1:
            quad = SphereQuadrature.build(1)
        else:
            n_theta = int(math.ceil(cfg.quad_scale * min_theta_nodes(n_osc)))
            quad = SphereQuadrature.build(cfg.d, max(n_theta, 3), cfg.n_azimuth, pole=phi.kappa)
        value = stationary_phase_functional(phi, n_osc, quad)
        rows.append((cfg.d, n_osc, value.real, value.imag, abs(value - target), quad.size))
    return SP_HEADER, rows


def run_fresnel(cfg: ExperimentConfig):
    rows = []
    for n in cfg.fresnel_n_list:
        value = oscillatory_integral(OscillatoryIntegralSpec(cfg.beta, n))
        rows.append((cfg.beta, n, value.real, value.imag, abs(value - FRESNEL_LIMIT)))
    return FRESNEL_HEADER, rows


def run_bench(cfg: ExperimentConfig):
    rows = reconstruction_benchmark(
        cfg.initial(), cfg.dispersion_spec(), Regularizer(cfg.rho, cfg.d), cfg.tau,
        cfg.epsilons, c=cfg.c, dx=cfg.dx, grid_cap=cfg.grid_cap, repeats=cfg.repeats)
    return BENCH_HEADER, [(r.epsilon, r.recon_wall_ms, r.recon_peak_mem_est,
                           r.grid_cells_required, r.grid_wall_ms, r.grid_estimated)
                          for r in rows]


def run_reconstruct(cfg: ExperimentConfig):
    eps = cfg.epsilon
    t = cfg.tau / eps**2
    field_ = reconstruct(cfg.initial(), cfg.dispersion_spec(eps), Regularizer(cfg.rho, cfg.d),
                         cfg.c, eps, t, default_directions(cfg.d), cfg.z_grid())
    ray = np.eye(cfg.d)[0] if cfg.ray_direction is None else np.asarray(cfg.ray_direction, float)
    ray = ray / np.linalg.norm(ray)
    ct = cfg.c * t
    r_min = max(ct - 32.0, 0.0) if cfg.r_min is None else cfg.r_min
    r_max = ct + 32.0 if cfg.r_max is None else cfg.r_max
    if not r_max > r_min:
        raise ConfigurationError("r_max must exceed r_min")
    s = np.linspace(r_min, r_max, cfg.n_samples)
    values = field_(s[:, None] * ray[None, :])
    return RECONSTRUCT_HEADER, [(x, v.real, v.imag) for x, v in zip(s, values)]


COMMANDS = {
    "converge": run_converge,
    "stationary-phase": run_stationary_phase,
    "fresnel": run_fresnel,
    "bench": run_bench,
    "reconstruct": run_reconstruct,
}


def render_plot(command: str, header, rows, path: Path):
    """Draw the CSV content of one subcommand into ``path`` (PNG)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    def num(v):
        try:
            return float(v)
        except (TypeError, ValueError):
            return np.nan
    data = np.array([[num(v) for v in r] for r in rows]) if rows else np.empty((0, len(header)))
    col = {name: i for i, name in enumerate(header)}
    fig, ax = plt.subplots(figsize=(6, 4))
    if command == "converge":
        for kn in np.unique(data[:, col["k_norm"]]):
            sel = data[:, col["k_norm"]] == kn
            ax.loglog(data[sel, col["epsilon"]], data[sel, col["abs_error"]], "o-",
                      label=f"|k| = {kn:g}")
        ax.set_xlabel("epsilon")
        ax.set_ylabel("abs error")
        ax.legend()
    elif command in ("stationary-phase", "fresnel"):
        err = "abs_error_vs_phi_kappa" if command == "stationary-phase" else "abs_error"
        ax.loglog(data[:, col["N"]], data[:, col[err]], "o-")
        ax.set_xlabel("N")
        ax.set_ylabel("abs error")
    elif command == "bench":
        ax.loglog(data[:, col["epsilon"]], data[:, col["recon_wall_ms"]], "o-",
                  label="reconstruction [ms]")
        ax.loglog(data[:, col["epsilon"]], data[:, col["grid_cells_required"]], "s--",
                  label="grid cells required")
        ax.set_xlabel("epsilon")
        ax.legend()
    else:
        x = data[:, col["x_coord"]]
        ax.plot(x, data[:, col["re"]], label="re")
        ax.plot(x, data[:, col["im"]], label="im")
        ax.plot(x, np.hypot(data[:, col["re"]], data[:, col["im"]]), "k", lw=0.8, label="abs")
        ax.set_xlabel("distance along ray")
        ax.legend()
    ax.set_title(command)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="profilewave", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value configuration file")
        p.add_argument("--out", help="CSV output path (default: stdout)")
        p.add_argument("--threads", type=int, help="worker threads for (epsilon, k) cells")
        p.add_argument("--quad-scale", type=float, help="multiplier on the minimum node count")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--plot", action="store_true",
                       help="also render a PNG next to --out")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = list(args.set)
    if args.threads is not None:
        overrides.append(f"threads={args.threads}")
    if args.quad_scale is not None:
        overrides.append(f"quad_scale={args.quad_scale}")
    try:
        cfg = load_config(args.config, overrides)
        if args.plot and not args.out:
            raise ConfigurationError("--plot needs --out (the PNG is written next to it)")
        header, rows = COMMANDS[args.command](cfg)
    except ResolutionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    buf = io.StringIO()
    write_csv(buf, header, rows)
    if args.out:
        out = Path(args.out)
        out.write_text(buf.getvalue())
        if args.plot:
            render_plot(args.command, header, rows, out.with_suffix(".png"))
    else:
        sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
