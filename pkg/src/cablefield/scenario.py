"""
Scenario configuration: one JSON file -> assembled, certified system.

Schema (SI units; complex entries written as [re, im], plain numbers are
taken as real):

    seed                 int, default 0
    geometry.box         [[x0,x1],[y0,y1],[z0,z1]], meters
    geometry.collar_halfwidth   dimensionless s-range of the tube collar
    geometry.cables      list of {type: segment|arc|helix|spline, radius,
                          line, ...type-specific parameters}
    line.k, line.n_cells, line.C/L/R/G   scalar or k x k matrix
    fields.grid          [nx, ny, nz]; fields.eps/mu/sigma scalar or
                          per-axis [ax, ay, az]; fields.n_theta
    boundary.W_B_inp     m x 4k; boundary.W_B_0 (2k-m) x 4k
    boundary.W_C_out     p x 4k, or "colocated" to derive the co-located
                          output from W_B
    sim.dt, sim.T, sim.input {kind, amplitude, freq, phase, t_on, ramp,
                          table_t, table_u}, sim.initial {kind: zero|
                          smooth|random|lift, seed, scale, V0},
                          sim.solver_tol, sim.record_stride

All boundary matrices act on the stacked port (I_tot(0), I_tot(1), V(0),
-V(1)); see the assembly module docstring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import assembly, certify, coupling, maxwell, sim, tline
from .errors import CableFieldError, ConfigError
from .geometry import (
    CircularArc,
    GeometrySpec,
    Helix,
    SplineCurve,
    StraightSegment,
    validate_geometry,
)


def parse_complex(value):
    """Number -> real scalar; [re, im] pair -> complex scalar; nested
    lists -> arrays with the same convention applied entrywise."""
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list):
        if len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
            return complex(value[0], value[1])
        return np.array([parse_complex(v) for v in value])
    raise ConfigError(f"cannot parse numeric entry {value!r}")


def parse_matrix(value, shape=None):
    out = parse_complex(value)
    out = np.atleast_2d(np.asarray(out))
    if shape is not None and out.shape != tuple(shape):
        raise ConfigError(f"matrix has shape {out.shape}, expected {tuple(shape)}")
    return out


def _build_cable(entry: dict):
    kind = entry.get("type", "segment")
    radius = float(entry["radius"])
    line = int(entry.get("line", 0))
    if kind == "segment":
        return StraightSegment(p0=np.asarray(entry["p0"], dtype=float),
                               direction=np.asarray(entry["direction"], dtype=float),
                               length=float(entry["length"]), radius=radius, line=line)
    if kind == "arc":
        return CircularArc(center=np.asarray(entry["center"], dtype=float),
                           u=np.asarray(entry["u"], dtype=float),
                           v=np.asarray(entry["v"], dtype=float),
                           rho=float(entry["rho"]), phi0=float(entry["phi0"]),
                           phi1=float(entry["phi1"]), radius=radius, line=line)
    if kind == "helix":
        return Helix(base=np.asarray(entry["base"], dtype=float),
                     axis=np.asarray(entry["axis"], dtype=float),
                     a=float(entry["a"]), b=float(entry["b"]),
                     turns=float(entry["turns"]), radius=radius,
                     phase=float(entry.get("phase", 0.0)), line=line)
    if kind == "spline":
        return SplineCurve(points=np.asarray(entry["points"], dtype=float),
                           radius=radius, line=line)
    raise ConfigError(f"unknown cable type {kind!r}")


def _port_matrix(bc: dict, key: str, k: int) -> np.ndarray:
    value = bc.get(key)
    if value is None or (isinstance(value, list) and len(value) == 0):
        return np.zeros((0, 4 * k))
    out = parse_matrix(value)
    if out.shape[1] != 4 * k:
        raise ConfigError(f"{key} must have 4k = {4 * k} columns, got {out.shape[1]}")
    return out


def _line_material_kwargs(lc: dict) -> dict:
    out = {}
    for name in ("C", "L", "R", "G"):
        if name in lc:
            v = lc[name]
            out[name] = v if np.isscalar(v) else np.asarray(parse_matrix(v))
    return out


@dataclass
class Scenario:
    config: dict
    seed: int
    geometry: GeometrySpec
    line_grid: tline.LineGrid
    line_materials: tline.LineMaterials
    line_blocks: tline.LineBlocks
    grid: maxwell.YeeGrid
    field_materials: maxwell.FieldMaterials
    curls: maxwell.CurlPair
    charts: list
    coupling: Optional[coupling.CouplingMatrices]
    bundle: assembly.OperatorBundle
    node: assembly.SystemNode
    bc_spec: certify.BoundaryConditionSpec
    W_C_full: Optional[np.ndarray]
    sim_config: Optional[sim.SimConfig]
    initial_spec: dict = field(default_factory=dict)

    @property
    def k(self):
        return self.line_grid.k

    def certificate(self) -> certify.Certificate:
        lo, hi = assembly.hodge_extremes(self.bundle)
        return certify.wellposedness_constants(self.bc_spec, lo, hi)

    def initial_state(self) -> np.ndarray:
        kind = self.initial_spec.get("kind", "zero")
        scale = float(self.initial_spec.get("scale", 1.0))
        if kind == "zero":
            return sim.zero_state(self.bundle)
        if kind == "smooth":
            return sim.smooth_state(self.bundle, scale=scale)
        if kind == "random":
            return sim.random_state(self.bundle,
                                    seed=int(self.initial_spec.get("seed", self.seed)),
                                    scale=scale)
        if kind == "lift":
            v0 = self.initial_spec.get("V0", "sine")
            if isinstance(v0, str):
                v0 = np.sin(np.pi * self.line_grid.nodes) * scale
            else:
                v0 = np.asarray(parse_complex(v0), dtype=float)
            line = int(self.initial_spec.get("line", 0))
            return sim.lifted_state(self.bundle, self.grid, self.charts[line],
                                    self.line_grid, v0, line=line)
        raise ConfigError(f"unknown initial condition kind {kind!r}")

    def closed_loop(self) -> assembly.ClosedLoop:
        return assembly.build_closed_loop(self.bundle, self.node)

    def simulate(self) -> sim.Trajectory:
        if self.sim_config is None:
            raise ConfigError("scenario has no sim section")
        return sim.run(self.closed_loop(), self.sim_config,
                       x0=self.initial_state(), W_C_full=self.W_C_full)


def load_config(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc


def build_scenario(config: dict) -> Scenario:
    for section in ("geometry", "line", "fields", "boundary"):
        if section not in config:
            raise ConfigError(f"scenario config is missing the {section!r} section")
    seed = int(config.get("seed", 0))

    geo = config["geometry"]
    cables = [_build_cable(e) for e in geo.get("cables", [])]
    spec = GeometrySpec(box=np.asarray(geo["box"], dtype=float), cables=cables,
                        collar_halfwidth=float(geo.get("collar_halfwidth", 0.3)))

    lc = config["line"]
    k = int(lc["k"])
    n_cells = int(lc["n_cells"])
    line_grid = tline.build_line_grid(n_cells, k)
    lm = tline.LineMaterials(k=k, **_line_material_kwargs(lc))
    line_blocks = tline.assemble_line(lm, line_grid)

    fc = config["fields"]
    grid = maxwell.build_grid(spec, fc["grid"])
    fm = maxwell.FieldMaterials(eps=fc.get("eps", 1.0), mu=fc.get("mu", 1.0),
                                sigma=fc.get("sigma", 0.0))
    curls = maxwell.assemble_curls(grid, fm)

    lines_used = sorted({c.line for c in cables})
    if any(l < 0 or l >= k for l in lines_used):
        raise ConfigError(f"cable line indices {lines_used} out of range for k={k}")
    if len(lines_used) != len(cables):
        raise ConfigError("two cables reference the same line component")

    n_theta = int(fc.get("n_theta", 16))
    charts = [spec.chart(i, n_eta=n_cells, n_theta=n_theta) for i in range(len(cables))]
    if cables:
        cp = coupling.assemble_P_el(charts, line_grid)
        traces = maxwell.surface_trace(grid, charts)
    else:
        cp, traces = None, None
    bundle = assembly.assemble_system(line_blocks, curls, coupling=cp, traces=traces)

    bc = config["boundary"]
    W_B_inp = _port_matrix(bc, "W_B_inp", k)
    W_B_0 = _port_matrix(bc, "W_B_0", k)
    if W_B_inp.shape[0] + W_B_0.shape[0] != 2 * k:
        raise ConfigError("boundary matrices must provide 2k rows in total "
                          f"(got {W_B_inp.shape[0]} + {W_B_0.shape[0]}, k={k})")
    W_B = np.vstack([W_B_inp, W_B_0])

    W_C_full = None
    wco = bc.get("W_C_out", "colocated")
    if isinstance(wco, str) and wco == "colocated":
        W_C_full = certify.build_colocated_output(W_B)
        m = W_B_inp.shape[0]
        W_C_out = W_C_full[:m] if m > 0 else W_C_full
    else:
        W_C_out = parse_matrix(wco)
        full = certify.find_full_colocated(W_B, W_C_out)
        if full is not None:
            W_C_full = full

    bc_spec = certify.BoundaryConditionSpec(W_B_inp=W_B_inp, W_B_0=W_B_0,
                                            W_C_out=W_C_out, k=k)
    node = assembly.SystemNode(W_B_inp=W_B_inp, W_B_0=W_B_0, W_C_out=W_C_out, k=k,
                               bc_tol=float(bc.get("bc_tol", 1e-8)))

    sim_cfg = None
    initial_spec = {}
    if "sim" in config:
        sc = config["sim"]
        inp = sc.get("input", {"kind": "zero"})
        amplitude = inp.get("amplitude")
        if amplitude is not None:
            amplitude = np.asarray(parse_complex(amplitude))
        signal = sim.InputSignal(
            m=node.m, kind=inp.get("kind", "zero"), amplitude=amplitude,
            freq=float(inp.get("freq", 1.0)), phase=float(inp.get("phase", 0.0)),
            t_on=float(inp.get("t_on", 0.0)), ramp=float(inp.get("ramp", 0.05)),
            table_t=inp.get("table_t"), table_u=inp.get("table_u"),
        )
        sim_cfg = sim.SimConfig(dt=float(sc["dt"]), T=float(sc["T"]), input=signal,
                                solver_tol=float(sc.get("solver_tol", 1e-10)),
                                record_stride=int(sc.get("record_stride", 1)))
        initial_spec = sc.get("initial", {"kind": "zero"})

    return Scenario(config=config, seed=seed, geometry=spec,
                    line_grid=line_grid, line_materials=lm, line_blocks=line_blocks,
                    grid=grid, field_materials=fm, curls=curls, charts=charts,
                    coupling=cp, bundle=bundle, node=node, bc_spec=bc_spec,
                    W_C_full=W_C_full, sim_config=sim_cfg, initial_spec=initial_spec)


def validate_scenario(config: dict) -> dict:
    """Assumption checks without full assembly; used by the validate command."""
    report = {"passed": True}
    try:
        geo = config["geometry"]
        cables = [_build_cable(e) for e in geo.get("cables", [])]
        spec = GeometrySpec(box=np.asarray(geo["box"], dtype=float), cables=cables,
                            collar_halfwidth=float(geo.get("collar_halfwidth", 0.3)))
        gr = validate_geometry(spec)
        report["geometry"] = {
            "passed": gr.passed,
            "disjoint_ok": gr.disjoint_ok,
            "min_pair_clearance": gr.min_pair_clearance,
            "cables": gr.cables,
        }
        report["passed"] &= gr.passed
    except (KeyError, CableFieldError) as exc:
        raise ConfigError(f"geometry section invalid: {exc}") from exc

    lc = config["line"]
    k = int(lc["k"])
    lm = tline.LineMaterials(k=k, **_line_material_kwargs(lc))
    line_rep = tline.validate_line_materials(lm)
    report["line_materials"] = line_rep
    report["passed"] &= line_rep["passed"]

    fc = config["fields"]
    fm = maxwell.FieldMaterials(eps=fc.get("eps", 1.0), mu=fc.get("mu", 1.0),
                                sigma=fc.get("sigma", 0.0))
    probe = np.asarray(np.meshgrid(*[np.linspace(*b, 5) for b in
                                     np.asarray(geo["box"], dtype=float)])).reshape(3, -1).T
    field_rep = maxwell.validate_field_materials(fm, probe)
    report["field_materials"] = field_rep
    report["passed"] &= field_rep["passed"]

    bc = config["boundary"]
    W_B_inp = _port_matrix(bc, "W_B_inp", k)
    W_B_0 = _port_matrix(bc, "W_B_0", k)
    if W_B_inp.shape[0] + W_B_0.shape[0] != 2 * k:
        raise ConfigError("boundary matrices must stack to 2k rows")
    adm = certify.check_admissible(np.vstack([W_B_inp, W_B_0]))
    report["boundary"] = adm
    report["passed"] &= adm["admissible"]
    report["passed"] = bool(report["passed"])
    return report
