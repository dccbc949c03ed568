"""Scenario configuration and the experiment campaigns.

A scenario is one JSON document.  Example::

    {
      "experiment": "atlas",
      "network": {"preset": "four-neuron"},
      "manifold": {"case": 1, "G": [-0.21, -0.6]},
      "output": "out/table1"
    }

``network`` is either ``{"preset": name, ...overrides}`` or an explicit
record with ``topology``, ``capacitance``, ``conductance``, ``self`` and
``inter`` (a characteristic record or a list of them).  ``manifold`` is an
explicit index ``{"q_s": [...], "q_i": [...]}`` or a case recipe
``{"case": 1, "G": [...]}`` / ``{"case": 2|3, "alpha": [...], "base": [...]}``;
``{"from_reference": true, "v0": [...]}`` takes the index of the state built
from the network's reference fluxes ``phi_s0``/``phi0`` and voltages ``v0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import metadata
import json
import logging
from pathlib import Path
import platform

import numpy as np

from .atlas import build_atlas
from .errors import HypothesisError, MnnLabError, ValidationError
from .fcd import check_boundedness, check_cooperative, fcd_vector_field
from .images import HoleFillParams, hole_filling
from .io import export_csv, export_pgm, read_pgm, sha256_file, trajectory_header, write_json
from .memristor import (DEFAULT_SMOOTHING, HpCharacteristic, PwlCharacteristic,
                        characteristic_from_dict, characteristic_to_dict)
from .ode import (ConvergenceCriterion, IntegratorOptions, cluster_points, convergence_stop,
                  detect_convergence, integrate, run_ensemble)
from .presets import (case_manifold, four_neuron_hp_network, four_neuron_network,
                      holefill_network)
from .topology import is_irreducible, topology_from_config
from .vcd import ManifoldIndex, NetworkSpec, VcdState, gamma_lift, manifold_index

log = logging.getLogger(__name__)

__all__ = [
    "EXPERIMENTS",
    "Scenario",
    "case_tables",
    "check_network",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
]

EXPERIMENTS = ("atlas", "trajectories", "ensemble", "hole-fill")
PRESETS = ("four-neuron", "four-neuron-hp", "holefill")
CASE_PARAM = {1: "G", 2: "alpha", 3: "alpha"}

ENSEMBLE_DEFAULTS = dict(t_end=200.0, rtol=1e-6, atol=1e-9, h_max=0.5)
TRAJECTORY_DEFAULTS = dict(t_end=50.0, rtol=1e-9, atol=1e-11, h_max=0.5)


@dataclass
class Scenario:
    experiment: str
    network: dict
    manifold: dict
    output: Path
    seed: int = 0
    integrator: dict = field(default_factory=dict)
    convergence: dict = field(default_factory=dict)
    allow_unbounded: bool = False
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    base_dir: Path | None = None

    @property
    def case(self):
        return self.manifold.get("case")

    @property
    def sweep(self):
        """Parameter values of a case recipe (``[None]`` for an explicit index)."""
        if self.case is None:
            return [None]
        return list(self.manifold[CASE_PARAM[self.case]])

    def build_network(self, param=None):
        rec = dict(self.network)
        if self.case == 1 and param is not None:
            rec["conductance"] = param
        elif self.case in (2, 3) and "conductance" not in rec:
            rec["conductance"] = -1.0
        return network_from_config(rec)

    def build_manifold(self, net, param=None):
        if self.case is None and self.manifold.get("from_reference"):
            v0 = self.manifold.get("v0", np.zeros(net.n))
            return manifold_index(net, VcdState(np.asarray(v0, dtype=float), net.phi_s0, net.phi0))
        if self.case is None:
            q0 = ManifoldIndex(self.manifold.get("q_s", np.zeros(net.n)),
                               self.manifold.get("q_i", np.zeros(net.n_c)))
            try:
                return q0.check(net)
            except ValidationError as exc:
                raise ValidationError(str(exc), "manifold") from None
        return case_manifold(self.case, param, net.n, net.n_c, self.manifold.get("base"))

    def integrator_options(self, defaults, **extra):
        kw = dict(defaults)
        kw.update(self.integrator)
        kw.update(extra)
        try:
            return IntegratorOptions(**kw)
        except (TypeError, ValidationError) as exc:
            raise ValidationError(str(exc), "integrator") from None

    def criterion(self):
        try:
            return ConvergenceCriterion(**self.convergence)
        except (TypeError, ValidationError) as exc:
            raise ValidationError(str(exc), "convergence") from None


def network_from_config(rec, path="network"):
    if not isinstance(rec, dict):
        raise ValidationError("expected an object", path)
    rec = dict(rec)
    preset = rec.pop("preset", None)
    smoothing = float(rec.pop("smoothing", DEFAULT_SMOOTHING))
    try:
        if preset == "four-neuron":
            return four_neuron_network(g=float(rec.get("conductance", -1.0)), smoothing=smoothing)
        if preset == "four-neuron-hp":
            return four_neuron_hp_network(g=float(rec.get("conductance", -1.0)), smoothing=smoothing,
                                          x0=float(rec.get("x0", 0.5)))
        if preset == "holefill":
            return holefill_network(int(rec.get("rows", 20)), int(rec.get("cols", 20)),
                                    g=float(rec.get("conductance", -3.0)), smoothing=smoothing)
    except MnnLabError as exc:
        raise ValidationError(str(exc), path) from None
    if preset is not None:
        raise ValidationError(f"unknown preset {preset!r}; choose from {PRESETS}", f"{path}.preset")
    for key in ("topology", "conductance", "self", "inter"):
        if key not in rec:
            raise ValidationError(f"missing field {key!r}", path)
    top = topology_from_config(rec["topology"], f"{path}.topology")
    self_chars = _chars(rec["self"], top.n, f"{path}.self")
    inter_chars = _chars(rec["inter"], top.n_c, f"{path}.inter")
    try:
        return NetworkSpec(top, rec.get("capacitance", 1.0), rec["conductance"], self_chars,
                           inter_chars, rec.get("phi_s0"), rec.get("phi0"))
    except ValidationError as exc:
        raise ValidationError(str(exc), path) from None


def _chars(rec, count, path):
    if isinstance(rec, list):
        if len(rec) != count:
            raise ValidationError(f"expected {count} characteristics, got {len(rec)}", path)
        return [characteristic_from_dict(r, f"{path}[{k}]") for k, r in enumerate(rec)]
    ch = characteristic_from_dict(rec, path)
    return [ch] * count


def parse_scenario(doc, base_dir=None):
    """Validate a scenario document; errors carry the offending field path."""
    if not isinstance(doc, dict):
        raise ValidationError("scenario must be a JSON object")
    kind = doc.get("experiment")
    if kind not in EXPERIMENTS:
        raise ValidationError(f"must be one of {EXPERIMENTS}, got {kind!r}", "experiment")
    network = doc.get("network")
    if not isinstance(network, dict):
        raise ValidationError("missing or not an object", "network")
    manifold = doc.get("manifold", {"q_s": None} if kind != "hole-fill" else {})
    if manifold is None:
        manifold = {}
    if not isinstance(manifold, dict):
        raise ValidationError("must be an object", "manifold")
    manifold = {k: v for k, v in manifold.items() if v is not None}
    case = manifold.get("case")
    if case is not None:
        if case not in CASE_PARAM:
            raise ValidationError(f"case must be 1, 2 or 3, got {case!r}", "manifold.case")
        key = CASE_PARAM[case]
        vals = manifold.get(key)
        if not isinstance(vals, list) or not vals:
            raise ValidationError(f"case {case} needs a nonempty list {key!r}", f"manifold.{key}")
        wrong = "alpha" if case == 1 else "G"
        if wrong in manifold:
            raise ValidationError(f"case {case} does not take {wrong!r}", f"manifold.{wrong}")
        if kind != "atlas" and len(vals) != 1:
            raise ValidationError(f"{kind} runs on a single manifold; give one {key!r} value",
                                  f"manifold.{key}")
    if kind == "hole-fill" and network.get("preset", "holefill") != "holefill" and "topology" not in network:
        raise ValidationError("hole filling needs a grid network", "network")
    out = Path(doc.get("output", "mnnlab-out"))
    if base_dir is not None and not out.is_absolute():
        out = Path(base_dir) / out
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0 or seed >= 2 ** 64:
        raise ValidationError("must be an unsigned 64-bit integer", "seed")
    options = doc.get(kind.replace("-", ""), {}) or {}
    if not isinstance(options, dict):
        raise ValidationError("must be an object", kind.replace("-", ""))
    return Scenario(kind, network, manifold, out, seed,
                    dict(doc.get("integrator", {}) or {}), dict(doc.get("convergence", {}) or {}),
                    bool(doc.get("allow_unbounded", False)), options, doc,
                    Path(base_dir) if base_dir is not None else None)


def load_scenario(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}", str(path)) from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}", str(path)) from None
    return parse_scenario(doc, base_dir=path.parent)


# ---------------------------------------------------------------------------

def check_network(net, q0, samples=1000, seed=0):
    """Boundedness, cooperativity and irreducibility report as a JSON-able dict."""
    bnd = check_boundedness(net)
    coop = check_cooperative(net, q0, samples=samples, seed=seed)
    irr = is_irreducible(net.topology)
    return {
        "boundedness": bnd.to_dict(),
        "cooperativity": {"passed": coop.passed, "samples": coop.samples,
                          "min_offdiag": coop.min_offdiag, "min_connected": coop.min_connected,
                          "violations": coop.violations},
        "irreducible": irr,
        "passed": bool(bnd.passed and coop.passed and irr),
    }


def _require_bounded(scn, net):
    rep = check_boundedness(net)
    if not rep.passed and not scn.allow_unbounded:
        raise HypothesisError(
            f"boundedness condition fails (margin {rep.epsilon:.6g}); "
            "set allow_unbounded for a negative control", "network")
    return rep


def case_tables(scn):
    """One ``(param, regions, n_as, n_u)`` row per sweep value; row errors are kept."""
    rows = []
    for param in scn.sweep:
        try:
            net = scn.build_network(param)
            q0 = scn.build_manifold(net, param)
            _require_bounded(scn, net)
            atlas = build_atlas(net, q0)
            rows.append({"param": param, "regions": atlas.n_regions, "n_as": atlas.n_as,
                         "n_u": atlas.n_u, "n_marginal": atlas.n_marginal,
                         "degenerate": len(atlas.degenerate_regions), "atlas": atlas})
        except MnnLabError as exc:
            log.warning("row %s failed: %s", param, exc)
            rows.append({"param": param, "error": f"{type(exc).__name__}: {exc}"})
    return rows


def _run_atlas(scn, out):
    rows = case_tables(scn)
    files = []
    pname = CASE_PARAM.get(scn.case, "index")
    table = [(r["param"] if r["param"] is not None else 0, r["regions"], r["n_as"], r["n_u"])
             for r in rows if "error" not in r]
    files.append(export_csv(out / "table.csv", [pname, "Pi", "n_as", "n_u"], table))
    for k, r in enumerate(rows):
        if "error" in r:
            continue
        files.append(write_json(out / f"atlas_{k}.json",
                                {pname: r["param"], **r["atlas"].to_dict()}))
    summary = {"rows": [{k: v for k, v in r.items() if k != "atlas"} for r in rows]}
    return files, summary


def _random_ics(scn, n, count, box):
    rng = np.random.default_rng(scn.seed)
    lo, hi = box
    return rng.uniform(lo, hi, size=(count, n))


def _segment_index(net, phi):
    """Segment index (0, 1, 2) of each pwl interconnection; -1 for other laws."""
    idx = np.full(phi.shape, -1, dtype=int)
    for k, ch in enumerate(net.inter_chars):
        if isinstance(ch, PwlCharacteristic):
            idx[..., k] = (phi[..., k] > ch.sigma_minus).astype(int) + (phi[..., k] > ch.sigma_plus)
    return idx


def hp_curvature_bound(ch):
    """Upper bound of ``|q''(phi)|`` for an HP law: ``beta*dR / r_on**3``."""
    return ch.beta * (ch.r_off - ch.r_on) / ch.r_on ** 3


def memductance_trace_stats(net, t, phi):
    """Switch counts and the largest discrete slope ``|dw/dphi|`` of the traces."""
    w = np.array([net.inter_bank.memductance(p) for p in phi]) if len(phi) else np.zeros((0, net.n_c))
    seg = _segment_index(net, phi)
    switches = int(np.sum((np.diff(seg, axis=0) != 0) & (seg[1:] >= 0)))
    dphi = np.abs(np.diff(phi, axis=0))
    dw = np.abs(np.diff(w, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        rate = np.where(dphi > 1e-12, dw / dphi, 0.0)
    return {
        "segment_switches": switches,
        "max_dw_dphi": float(rate.max()) if rate.size else 0.0,
        "values_visited": sorted({round(float(v), 6) for v in np.unique(np.round(w, 6))})[:50],
    }


def _run_trajectories(scn, out):
    param = scn.sweep[0]
    net = scn.build_network(param)
    q0 = scn.build_manifold(net, param)
    _require_bounded(scn, net)
    opts = scn.integrator_options(TRAJECTORY_DEFAULTS)
    crit = scn.criterion()
    ics = scn.options.get("initial_conditions")
    if ics is None:
        ics = _random_ics(scn, net.n, int(scn.options.get("count", 2)),
                          scn.options.get("box", (-3.0, 3.0)))
    rhs = fcd_vector_field(net, q0)
    files, runs = [], []
    header = trajectory_header(net)
    w_header = ["t"] + [f"w_{i + 1}_{j + 1}" for i, j in net.topology.pairs]
    for k, x0 in enumerate(np.asarray(ics, dtype=float)):
        traj = integrate(rhs, x0, opts)
        full = gamma_lift(net, traj.y, q0)
        files.append(export_csv(out / f"trajectory_{k}.csv", header,
                                np.column_stack([traj.t, full])))
        phi = full[:, 2 * net.n:]
        w = np.array([net.inter_bank.memductance(p) for p in phi])
        files.append(export_csv(out / f"memductance_{k}.csv", w_header, np.column_stack([traj.t, w])))
        eq = detect_convergence(traj, rhs, crit)
        stats = memductance_trace_stats(net, traj.t, phi)
        runs.append({"initial": x0.tolist(), "converged": eq is not None,
                     "terminal": traj.final.tolist(),
                     "terminal_v": float(np.abs(full[-1, :net.n]).max()),
                     "steps": len(traj.t) - 1, **stats})
    eqs, _ = cluster_points([np.asarray(r["terminal"]) for r in runs if r["converged"]], 1e-4)
    return files, {"runs": runs, "distinct_equilibria": len(eqs)}


def _run_ensemble(scn, out, runs=None):
    param = scn.sweep[0]
    net = scn.build_network(param)
    q0 = scn.build_manifold(net, param)
    _require_bounded(scn, net)
    count = int(runs if runs is not None else scn.options.get("runs", 100))
    ics = _random_ics(scn, net.n, count, scn.options.get("box", (-3.0, 3.0)))
    opts = scn.integrator_options(ENSEMBLE_DEFAULTS)
    stats = run_ensemble(net, q0, ics, opts, scn.criterion(), seed=scn.seed)
    summary = stats.to_dict()
    pwl = all(isinstance(c, PwlCharacteristic) for c in net.self_chars + net.inter_chars)
    if pwl:
        atlas = build_atlas(net, q0)
        stable = [e.phi for e in atlas.stable()]
        summary["atlas"] = {"n_as": atlas.n_as, "n_u": atlas.n_u}
        summary["distance_to_stable"] = [
            float(min(np.abs(e - s).max() for s in stable)) if stable else None
            for e in stats.equilibria]
    files = [write_json(out / "ensemble.json", summary)]
    files.append(export_csv(out / "equilibria.csv", [f"phis_{i + 1}" for i in range(net.n)],
                            stats.equilibria))
    brief = {k: summary[k] for k in ("seed", "runs", "converged_fraction",
                                     "distinct_equilibria", "max_terminal_v")}
    if "distance_to_stable" in summary:
        brief["distance_to_stable"] = summary["distance_to_stable"]
    return files, brief


def _run_holefill(scn, out, image=None):
    image = image or scn.options.get("image")
    if image is None:
        raise ValidationError("no input image given", "holefill.image")
    image = Path(image)
    if scn.base_dir is not None and not image.is_absolute() and not image.exists():
        image = scn.base_dir / image
    img = read_pgm(image)
    net_rec = dict(scn.network)
    net_rec.setdefault("rows", img.rows)
    net_rec.setdefault("cols", img.cols)
    net = network_from_config(net_rec)
    if net.n != img.rows * img.cols:
        raise ValidationError(f"network has {net.n} neurons for a {img.rows}x{img.cols} image",
                              "network")
    _require_bounded(scn, net)
    known = {f for f in HoleFillParams.__dataclass_fields__}
    kw = {k: v for k, v in scn.options.items() if k in known}
    kw.update({k: v for k, v in scn.integrator.items() if k in ("t_end", "rtol", "atol", "h_max")})
    if "snapshots" in kw:
        kw["snapshots"] = tuple(kw["snapshots"])
    kw["criterion"] = scn.criterion()
    res = hole_filling(img, HoleFillParams(**kw), net=net)
    files = [export_pgm(out / "input.pgm", img)]
    for t, snap in sorted(res.snapshots.items()):
        files.append(export_pgm(out / f"snapshot_t{t:g}.pgm", snap))
    files.append(export_pgm(out / "final.pgm", res.final))
    files.append(export_pgm(out / "oracle.pgm", res.oracle))
    traj = res.trajectory
    files.append(export_csv(out / "fluxes.csv", ["t"] + [f"phis_{i + 1}" for i in range(net.n)],
                            np.column_stack([traj.t, traj.y])))
    return files, {"matches_oracle": res.matches_oracle, "terminal_v": res.terminal_v,
                   "t_final": res.t_final, "snapshots": sorted(res.snapshots)}


def _versions():
    try:
        own = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"mnnlab": own, "numpy": np.__version__, "python": platform.python_version()}


def run_scenario(scn, image=None, runs=None):
    """Run a scenario, write its outputs and ``manifest.json``; return the manifest."""
    out = Path(scn.output)
    out.mkdir(parents=True, exist_ok=True)
    if scn.experiment == "atlas":
        files, summary = _run_atlas(scn, out)
    elif scn.experiment == "trajectories":
        files, summary = _run_trajectories(scn, out)
    elif scn.experiment == "ensemble":
        files, summary = _run_ensemble(scn, out, runs)
    else:
        files, summary = _run_holefill(scn, out, image)
    manifest = {
        "experiment": scn.experiment,
        "config": scn.raw,
        "seed": scn.seed,
        "versions": _versions(),
        "outputs": [{"path": Path(f).name, "sha256": sha256_file(f)} for f in files],
        "summary": summary,
    }
    write_json(out / "manifest.json", manifest)
    return manifest


def network_to_config(net):
    """Explicit config record for a network (round-trips through the parser)."""
    return {
        "topology": net.topology.indicator.tolist(),
        "capacitance": net.capacitance.tolist(),
        "conductance": net.conductance.tolist(),
        "self": [characteristic_to_dict(c) for c in net.self_chars],
        "inter": [characteristic_to_dict(c) for c in net.inter_chars],
        "phi_s0": net.phi_s0.tolist(),
        "phi0": net.phi0.tolist(),
    }


def is_hp(ch):
    return isinstance(ch, HpCharacteristic)
