"""Seeded Monte-Carlo experiment harness with a flat-file surface.

An experiment is a grid of cells (mechanism, zeta, cap, power box) swept
with common random numbers: trial t draws its channels from seed
base_seed + t in every cell, so per-trial comparisons across cells are
exact.  Within a trial, winning allocations are carried into every cell
whose feasible set contains them (larger cap, larger box, and for the
non-coherent mechanism smaller zeta); the reported rate is the better of
the fresh solve and the carried point.  That makes the per-trial
monotonicity guarantees hold with zero tolerance instead of up to solver
noise.

Output is a versioned CSV (floats at 10 significant digits, comment lines
prefixed with '#') plus a per-cell summary block; identical configs
reproduce identical bytes when the timestamp comment is suppressed.
"""

import concurrent.futures
import csv
import datetime
import math
import os
from dataclasses import dataclass, field
from typing import Optional

from .model import (
    Mechanism,
    PowerAllocation,
    SystemParams,
    db_to_linear,
    exact_rate,
    gen_channels,
    hd_baseline_rate,
)
from .optimizer import (
    VAR_PRK,
    VAR_PS,
    Scenario,
    SolverConfig,
    _best_on_slice,
    _interference,
    brute_force,
)
from .selection import select_relay

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "schema_version", "mechanism", "zeta", "I_bar_P_dB", "P_max_dB",
    "trial_seed", "selected_relay", "P_S", "P_Rk", "rate", "oracle_rate",
    "gap_percent", "iterations", "converged",
)

MECH_LABEL = {
    Mechanism.NONCOHERENT: "NonCoherent",
    Mechanism.COHERENT: "Coherent",
    Mechanism.HALF_DUPLEX: "HalfDuplex",
}

# numerical slack when re-checking a pinned allocation against the cap
_CAP_SLACK = 1e-8


class ConfigError(ValueError):
    """Malformed experiment configuration or config file."""


@dataclass(frozen=True)
class FixedPowerSweep:
    fix: str
    value_db: float
    sweep_db: tuple

    def __post_init__(self):
        if self.fix not in (VAR_PS, VAR_PRK):
            raise ConfigError(f"fix must be {VAR_PS!r} or {VAR_PRK!r}")
        if not self.sweep_db:
            raise ConfigError("sweep_db must be non-empty")
        for v in (self.value_db, *self.sweep_db):
            if not math.isfinite(v):
                raise ConfigError("sweep values must be finite dB")


def _check_axis(name, values):
    if not values:
        raise ConfigError(f"{name} must be non-empty")
    for v in values:
        if not math.isfinite(v):
            raise ConfigError(f"{name} entries must be finite")
    if len(set(values)) != len(values):
        raise ConfigError(f"{name} entries must be distinct")


@dataclass(frozen=True)
class ExperimentConfig:
    k: int = 4
    trials: int = 500
    base_seed: int = 0
    zeta_list: tuple = (0.001,)
    i_bar_p_db_list: tuple = (10.0,)
    p_max_db_list: tuple = (20.0,)
    mechanisms: tuple = (Mechanism.NONCOHERENT, Mechanism.COHERENT)
    fixed_power_sweep: Optional[FixedPowerSweep] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    oracle: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        _check_axis("zeta_list", self.zeta_list)
        _check_axis("i_bar_p_db_list", self.i_bar_p_db_list)
        _check_axis("p_max_db_list", self.p_max_db_list)
        if any(z < 0.0 for z in self.zeta_list):
            raise ConfigError("zeta values must be nonnegative")
        if not self.mechanisms:
            raise ConfigError("mechanisms must be non-empty")
        for m in self.mechanisms:
            if not isinstance(m, Mechanism):
                raise ConfigError(f"unknown mechanism {m!r}")
        if len(set(self.mechanisms)) != len(self.mechanisms):
            raise ConfigError("mechanisms must be distinct")


_INT_KEYS = {"k", "trials", "base_seed", "solver.max_iters", "solver.grid_n",
             "solver.refine_rounds"}
_FLOAT_KEYS = {"fix_value_db", "solver.rel_tol", "solver.golden_tol",
               "solver.bisect_tol"}
_LIST_KEYS = {"zeta_list", "i_bar_p_db_list", "p_max_db_list", "sweep_db"}
_OTHER_KEYS = {"mechanisms", "oracle", "fix"}

_FIX_NAMES = {"p_s": VAR_PS, "ps": VAR_PS, "p_rk": VAR_PRK, "prk": VAR_PRK}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the flat key=value grammar.

    One `key = value` pair per line; '#' starts a comment line; lists are
    comma-separated; booleans are true/false.  Unknown or repeated keys
    are errors.
    """
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | _OTHER_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: repeated key {key!r}")
        try:
            if key in _INT_KEYS:
                seen[key] = int(value)
            elif key in _FLOAT_KEYS:
                seen[key] = float(value)
            elif key in _LIST_KEYS:
                seen[key] = tuple(float(p) for p in value.split(","))
            elif key == "oracle":
                if value.lower() not in ("true", "false"):
                    raise ValueError(value)
                seen[key] = value.lower() == "true"
            elif key == "fix":
                name = value.lower()
                if name not in _FIX_NAMES:
                    raise ValueError(value)
                seen[key] = _FIX_NAMES[name]
            else:
                seen[key] = tuple(Mechanism.parse(p)
                                  for p in value.split(","))
        except ValueError as exc:
            raise ConfigError(
                f"line {lineno}: bad value for {key!r}: {value!r}") from exc

    sweep_keys = {"fix", "fix_value_db", "sweep_db"} & seen.keys()
    sweep = None
    if sweep_keys:
        if len(sweep_keys) != 3:
            raise ConfigError(
                "fixed-power sweep needs fix, fix_value_db and sweep_db")
        sweep = FixedPowerSweep(fix=seen.pop("fix"),
                                value_db=seen.pop("fix_value_db"),
                                sweep_db=seen.pop("sweep_db"))

    solver_kwargs = {}
    for key in list(seen):
        if key.startswith("solver."):
            solver_kwargs[key.split(".", 1)[1]] = seen.pop(key)
    try:
        solver = SolverConfig(**solver_kwargs)
    except ValueError as exc:
        raise ConfigError(f"bad solver settings: {exc}") from exc

    return ExperimentConfig(fixed_power_sweep=sweep, solver=solver, **seen)


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


@dataclass(frozen=True)
class ResultRow:
    mechanism: str
    zeta: float
    i_bar_p_db: float
    p_max_db: float
    trial_seed: int
    selected_relay: int
    p_s: float
    p_rk: float
    rate: float
    oracle_rate: Optional[float]
    gap_percent: Optional[float]
    iterations: int
    converged: bool


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(value, ".10g")


def _row_record(row: ResultRow) -> dict:
    return {
        "schema_version": str(SCHEMA_VERSION),
        "mechanism": row.mechanism,
        "zeta": _fmt(row.zeta),
        "I_bar_P_dB": _fmt(row.i_bar_p_db),
        "P_max_dB": _fmt(row.p_max_db),
        "trial_seed": str(row.trial_seed),
        "selected_relay": str(row.selected_relay),
        "P_S": _fmt(row.p_s),
        "P_Rk": _fmt(row.p_rk),
        "rate": _fmt(row.rate),
        "oracle_rate": _fmt(row.oracle_rate),
        "gap_percent": _fmt(row.gap_percent),
        "iterations": str(row.iterations),
        "converged": _fmt(row.converged),
    }


def read_result_rows(path: str) -> list:
    """Load CSV rows back by header name (column order is irrelevant)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None:
        raise ConfigError(f"{path}: missing CSV header")
    missing = set(CSV_COLUMNS) - set(reader.fieldnames)
    if missing:
        raise ConfigError(f"{path}: missing columns {sorted(missing)}")
    rows = []
    for rec in reader:
        if rec["schema_version"] != str(SCHEMA_VERSION):
            raise ConfigError(
                f"{path}: unsupported schema_version "
                f"{rec['schema_version']!r}")
        rows.append(ResultRow(
            mechanism=rec["mechanism"],
            zeta=float(rec["zeta"]),
            i_bar_p_db=float(rec["I_bar_P_dB"]),
            p_max_db=float(rec["P_max_dB"]),
            trial_seed=int(rec["trial_seed"]),
            selected_relay=int(rec["selected_relay"]),
            p_s=float(rec["P_S"]),
            p_rk=float(rec["P_Rk"]),
            rate=float(rec["rate"]),
            oracle_rate=(float(rec["oracle_rate"])
                         if rec["oracle_rate"] else None),
            gap_percent=(float(rec["gap_percent"])
                         if rec["gap_percent"] else None),
            iterations=int(rec["iterations"]),
            converged=rec["converged"] == "true",
        ))
    return rows


def _write_csv(path: str, rows, summary: str, deterministic: bool):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if not deterministic:
            stamp = datetime.datetime.now(datetime.timezone.utc)
            fh.write(f"# generated {stamp.isoformat()}\n")
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(_row_record(row))
        for line in summary.splitlines():
            fh.write(f"# {line}\n")


def _resolve_jobs(jobs) -> int:
    if jobs is None:
        env = os.environ.get("FDCRN_JOBS", "").strip()
        jobs = int(env) if env else 1
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    return jobs


# internal per-cell incumbent: allocation plus solve metadata
@dataclass(frozen=True)
class _Best:
    rate: float
    relay: int
    p_s: float
    p_rk: float
    iterations: int
    converged: bool


def _fd_cell_rows(config, channels, seed, mech):
    """Solve one trial's grid for a full-duplex mechanism, with carrying."""
    zetas_desc = sorted(config.zeta_list, reverse=True)
    pmaxs = sorted(config.p_max_db_list)
    ibars = sorted(config.i_bar_p_db_list)
    best = {}
    out = {}
    for zeta in zetas_desc:
        for pmax_db in pmaxs:
            for ibar_db in ibars:
                box = db_to_linear(pmax_db)
                params = SystemParams(zeta=zeta,
                                      i_bar_p=db_to_linear(ibar_db),
                                      p_s_max=box, p_rk_max=box)
                sc = Scenario(channels, params, mech)
                sel = select_relay(sc, config.solver).best
                win = _Best(sel.rate, sel.relay_index, sel.p_s, sel.p_rk,
                            sel.iterations, sel.converged)
                # carried allocations stay feasible: the cap only grew
                # (same interference expression), or the box only grew
                for key in ((zeta, pmax_db, _prev(ibars, ibar_db)),
                            (zeta, _prev(pmaxs, pmax_db), ibar_db)):
                    prior = best.get(key)
                    if prior is not None and prior.rate > win.rate:
                        win = prior
                if mech is Mechanism.NONCOHERENT:
                    # dropping zeta relaxes the cap and lifts the rate at
                    # the same point, so carry from the next-worse QSIC
                    prior = best.get((_prev_rev(zetas_desc, zeta), pmax_db,
                                      ibar_db))
                    if prior is not None:
                        alloc = PowerAllocation(prior.p_s, prior.p_rk)
                        rate = exact_rate(channels, params, alloc, prior.relay)
                        if rate > win.rate:
                            win = _Best(rate, prior.relay, prior.p_s,
                                        prior.p_rk, prior.iterations,
                                        prior.converged)
                best[(zeta, pmax_db, ibar_db)] = win
                oracle_rate = None
                gap = None
                if config.oracle:
                    oracle_rate = max(
                        brute_force(sc, k, config.solver).rate
                        for k in range(config.k))
                    gap = (0.0 if oracle_rate <= 0.0 else
                           100.0 * (oracle_rate - win.rate) / oracle_rate)
                out[(zeta, ibar_db, pmax_db)] = ResultRow(
                    mechanism=MECH_LABEL[mech], zeta=zeta,
                    i_bar_p_db=ibar_db, p_max_db=pmax_db, trial_seed=seed,
                    selected_relay=win.relay, p_s=win.p_s, p_rk=win.p_rk,
                    rate=win.rate, oracle_rate=oracle_rate, gap_percent=gap,
                    iterations=win.iterations, converged=win.converged)
    return out


def _hd_solve(channels, k, cap, box, sigma_params):
    """Corner solution: each power maxes out its own per-phase cap."""
    g_sr, g_rd, g_rp, _ = channels.gains(k)
    g_sp = abs(channels.h_sp) ** 2
    ps = box if g_sp == 0.0 else min(box, cap / g_sp)
    prk = box if g_rp == 0.0 else min(box, cap / g_rp)
    alloc = PowerAllocation(ps, prk)
    return hd_baseline_rate(channels, sigma_params, alloc, k), ps, prk


def _hd_cell_rows(config, channels, seed):
    pmaxs = sorted(config.p_max_db_list)
    ibars = sorted(config.i_bar_p_db_list)
    sigma_params = SystemParams(zeta=0.0)
    best = {}
    out = {}
    for pmax_db in pmaxs:
        for ibar_db in ibars:
            cap = db_to_linear(ibar_db)
            box = db_to_linear(pmax_db)
            win = None
            for k in range(config.k):
                rate, ps, prk = _hd_solve(channels, k, cap, box, sigma_params)
                if win is None or rate > win.rate:
                    win = _Best(rate, k, ps, prk, 1, True)
            for key in ((pmax_db, _prev(ibars, ibar_db)),
                        (_prev(pmaxs, pmax_db), ibar_db)):
                prior = best.get(key)
                if prior is not None and prior.rate > win.rate:
                    win = prior
            best[(pmax_db, ibar_db)] = win
            out[(0.0, ibar_db, pmax_db)] = ResultRow(
                mechanism=MECH_LABEL[Mechanism.HALF_DUPLEX], zeta=0.0,
                i_bar_p_db=ibar_db, p_max_db=pmax_db, trial_seed=seed,
                selected_relay=win.relay, p_s=win.p_s, p_rk=win.p_rk,
                rate=win.rate, oracle_rate=None, gap_percent=None,
                iterations=win.iterations, converged=win.converged)
    return out


def _prev(sorted_vals, value):
    i = sorted_vals.index(value)
    return sorted_vals[i - 1] if i > 0 else None


def _prev_rev(desc_vals, value):
    # the previously processed (larger) zeta
    i = desc_vals.index(value)
    return desc_vals[i - 1] if i > 0 else None


def _experiment_trial(config: ExperimentConfig, trial: int) -> list:
    seed = config.base_seed + trial
    channels = gen_channels(seed, config.k)
    rows = []
    for mech in config.mechanisms:
        if mech is Mechanism.HALF_DUPLEX:
            cells = _hd_cell_rows(config, channels, seed)
            zetas = (0.0,)
        else:
            cells = _fd_cell_rows(config, channels, seed, mech)
            zetas = config.zeta_list
        for zeta in zetas:
            for ibar_db in config.i_bar_p_db_list:
                for pmax_db in config.p_max_db_list:
                    rows.append(cells[(zeta, ibar_db, pmax_db)])
    return rows


def _run_trials(config, jobs, worker):
    trials = range(config.trials)
    if jobs == 1:
        return [worker(config, t) for t in trials]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, [config] * config.trials, trials,
                             chunksize=max(1, config.trials // (4 * jobs))))


def _summarize(rows) -> str:
    cells = {}
    order = []
    for row in rows:
        key = (row.mechanism, row.zeta, row.i_bar_p_db, row.p_max_db)
        if key not in cells:
            cells[key] = []
            order.append(key)
        cells[key].append(row)
    lines = []
    for key in order:
        group = cells[key]
        mean_rate = sum(r.rate for r in group) / len(group)
        line = (f"summary mechanism={key[0]} zeta={_fmt(key[1])} "
                f"I_bar_P_dB={_fmt(key[2])} P_max_dB={_fmt(key[3])} "
                f"trials={len(group)} mean_rate={_fmt(mean_rate)}")
        gaps = [r.gap_percent for r in group if r.gap_percent is not None]
        if gaps:
            line += f" max_gap_percent={_fmt(max(gaps))}"
        lines.append(line)
    return "\n".join(lines)


def run_experiment(config: ExperimentConfig, out_path: str,
                   deterministic: bool = False, jobs=None) -> str:
    """Sweep the cell grid, write the CSV, return the summary block."""
    jobs = _resolve_jobs(jobs)
    per_trial = _run_trials(config, jobs, _experiment_trial)
    # cell-major output: each trial emits cells in the same config order
    rows = [per_trial[t][c]
            for c in range(len(per_trial[0]))
            for t in range(config.trials)]
    summary = _summarize(rows)
    _write_csv(out_path, rows, summary, deterministic)
    return summary


def _swept(fix: str) -> str:
    return VAR_PRK if fix == VAR_PS else VAR_PS


def _alloc_pair(fix: str, fixed_value: float, swept_value: float):
    if fix == VAR_PS:
        return fixed_value, swept_value
    return swept_value, fixed_value


def _hd_line_feasible(channels, k, cap, ps, prk):
    g_sp = abs(channels.h_sp) ** 2
    _, _, g_rp, _ = channels.gains(k)
    return g_sp * ps <= cap and g_rp * prk <= cap


def _sweep_series(config, channels, scenario, mech, zeta, ibar_db, pmax_db,
                  seed, fixed_value, sweep_vals):
    """Pick one relay for the whole sweep line, then pin both powers.

    Selecting once per trial keeps each curve a single relay's rate, so
    the zeta=0 curve inherits the exact per-point monotonicity of the
    rate itself; re-selecting per point would splice curves together and
    break it whenever the incumbent relay exits feasibility.
    """
    sweep = config.fixed_power_sweep
    cap = db_to_linear(ibar_db)
    box = db_to_linear(pmax_db)
    sigma_params = SystemParams(zeta=0.0)
    selected = -1
    best_val = -math.inf
    if fixed_value <= box:
        for k in range(config.k):
            if mech is Mechanism.HALF_DUPLEX:
                ps0, prk0 = _alloc_pair(sweep.fix, fixed_value, 0.0)
                if not _hd_line_feasible(channels, k, cap, ps0, prk0):
                    continue
                g_sp = abs(channels.h_sp) ** 2
                _, _, g_rp, _ = channels.gains(k)
                g_swp = g_rp if sweep.fix == VAR_PS else g_sp
                swept_hi = box if g_swp == 0.0 else min(box, cap / g_swp)
                ps, prk = _alloc_pair(sweep.fix, fixed_value, swept_hi)
                val = hd_baseline_rate(channels, sigma_params,
                                       PowerAllocation(ps, prk), k)
            else:
                res = _best_on_slice(scenario, k, _swept(sweep.fix),
                                     fixed_value, config.solver)
                if res is None:
                    continue
                val = res[1]
            if val > best_val:
                best_val, selected = val, k
    rows = []
    for v in sweep_vals:
        rate = 0.0
        converged = False
        ps, prk = _alloc_pair(sweep.fix, fixed_value, v)
        if selected >= 0 and v <= box:
            alloc = PowerAllocation(ps, prk)
            if mech is Mechanism.HALF_DUPLEX:
                if _hd_line_feasible(channels, selected, cap, ps, prk):
                    rate = hd_baseline_rate(channels, sigma_params, alloc,
                                            selected)
                    converged = True
            else:
                interf = _interference(scenario, selected, ps, prk)
                if interf <= cap * (1.0 + _CAP_SLACK) + 1e-12:
                    rate = exact_rate(channels, scenario.params, alloc,
                                      selected)
                    converged = True
        rows.append(ResultRow(
            mechanism=MECH_LABEL[mech], zeta=zeta, i_bar_p_db=ibar_db,
            p_max_db=pmax_db, trial_seed=seed, selected_relay=selected,
            p_s=ps, p_rk=prk, rate=rate, oracle_rate=None, gap_percent=None,
            iterations=1, converged=converged))
    return rows


def _sweep_trial(config: ExperimentConfig, trial: int) -> list:
    seed = config.base_seed + trial
    channels = gen_channels(seed, config.k)
    sweep = config.fixed_power_sweep
    fixed_value = db_to_linear(sweep.value_db)
    sweep_vals = [db_to_linear(v_db) for v_db in sweep.sweep_db]
    mechs = [m for m in config.mechanisms if m is not Mechanism.HALF_DUPLEX]
    rows = []
    for ibar_db in config.i_bar_p_db_list:
        for pmax_db in config.p_max_db_list:
            for mech in mechs:
                for zeta in config.zeta_list:
                    params = SystemParams(zeta=zeta,
                                          i_bar_p=db_to_linear(ibar_db),
                                          p_s_max=db_to_linear(pmax_db),
                                          p_rk_max=db_to_linear(pmax_db))
                    sc = Scenario(channels, params, mech)
                    rows.extend(_sweep_series(
                        config, channels, sc, mech, zeta, ibar_db, pmax_db,
                        seed, fixed_value, sweep_vals))
            # the half-duplex reference curve rides along every sweep
            rows.extend(_sweep_series(
                config, channels, None, Mechanism.HALF_DUPLEX, 0.0,
                ibar_db, pmax_db, seed, fixed_value, sweep_vals))
    return rows


def run_fixed_power_sweep(config: ExperimentConfig, out_path: str,
                          deterministic: bool = False, jobs=None) -> str:
    """Rate-vs-power curves with one power pinned; see module docstring."""
    if config.fixed_power_sweep is None:
        raise ConfigError("config has no fixed_power_sweep section")
    jobs = _resolve_jobs(jobs)
    per_trial = _run_trials(config, jobs, _sweep_trial)
    rows = [per_trial[t][c]
            for c in range(len(per_trial[0]))
            for t in range(config.trials)]
    summary = _summarize(rows)
    _write_csv(out_path, rows, summary, deterministic)
    return summary


def emit_plot_script(csv_path: str, out_path: str) -> None:
    """Write a standalone matplotlib script for the CSV's series.

    The script re-reads the CSV by column name at plot time; this
    generator only decides which figures and series exist.
    """
    rows = read_result_rows(csv_path)
    series = sorted({(r.mechanism, r.zeta) for r in rows})
    figures = []
    if len({r.i_bar_p_db for r in rows}) > 1:
        figures.append(("I_bar_P_dB", "interference cap (dB)",
                        "rate_vs_cap.png", "x"))
    if len({r.p_max_db for r in rows}) > 1:
        figures.append(("P_max_dB", "power budget (dB)",
                        "rate_vs_pmax.png", "x"))
    if not figures and rows:
        swept = ("P_Rk" if len({r.p_rk for r in rows})
                 >= len({r.p_s for r in rows}) else "P_S")
        figures.append((swept, f"{swept} (dB)",
                        f"rate_vs_{swept.lower()}.png", "db"))

    lines = [
        "#!/usr/bin/env python3",
        f"# plotting companion generated for {os.path.basename(csv_path)}",
    ]
    if not rows:
        lines.append("# warning: the CSV holds no data rows; nothing to plot")
    lines += [
        "import csv",
        "import math",
        "from collections import defaultdict",
        "",
        "import matplotlib",
        'matplotlib.use("Agg")',
        "import matplotlib.pyplot as plt",
        "",
        f"CSV_PATH = {csv_path!r}",
        f"SERIES = {series!r}",
        f"FIGURES = {figures!r}",
        "",
        "with open(CSV_PATH, encoding='utf-8') as fh:",
        "    rows = list(csv.DictReader(",
        "        ln for ln in fh if not ln.startswith('#')))",
        "",
        "for column, xlabel, png, kind in FIGURES:",
        "    fig, ax = plt.subplots(figsize=(7, 4.5))",
        "    for mechanism, zeta in SERIES:",
        "        acc = defaultdict(list)",
        "        for row in rows:",
        "            if row['mechanism'] != mechanism:",
        "                continue",
        "            if float(row['zeta']) != zeta:",
        "                continue",
        "            x = float(row[column])",
        "            if kind == 'db':",
        "                x = 10.0 * math.log10(x) if x > 0 else float('-inf')",
        "            acc[x].append(float(row['rate']))",
        "        if not acc:",
        "            continue",
        "        xs = sorted(x for x in acc if math.isfinite(x))",
        "        ys = [sum(acc[x]) / len(acc[x]) for x in xs]",
        "        ax.plot(xs, ys, marker='o',",
        "                label=f'{mechanism}, zeta={zeta:g}')",
        "    ax.set_xlabel(xlabel)",
        "    ax.set_ylabel('mean rate (bit/s/Hz)')",
        "    ax.grid(True, alpha=0.3)",
        "    ax.legend(fontsize=8)",
        "    fig.tight_layout()",
        "    fig.savefig(png, dpi=150)",
        "    print('wrote', png)",
    ]
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
