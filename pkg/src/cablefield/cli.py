"""
Command-line front end: validate | certify | simulate | converge.

Exit codes: 0 success, 1 validation/certification failure, 2 usage or
parse error, 3 runtime solver error.  Run as ``python -m cablefield``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import CableFieldError, ConfigError, SolverError
from .scenario import build_scenario, load_config, validate_scenario

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SOLVER = 0, 1, 2, 3


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    return str(obj)


def _emit(payload: dict, path: str = None):
    text = json.dumps(payload, indent=2, default=_json_default, sort_keys=True)
    if path:
        with open(path, "w") as f:
            f.write(text + "\n")
    print(text)


def _outdir(args) -> str:
    out = args.output_dir or "."
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    config = load_config(args.scenario)
    report = validate_scenario(config)
    _emit(report, os.path.join(_outdir(args), "validate.json") if args.output_dir else None)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_certify(args) -> int:
    config = load_config(args.scenario)
    scn = build_scenario(config)
    cert = scn.certificate()
    payload = cert.as_dict()
    payload["green_residual"] = scn.bundle.green_residual
    _emit(payload, os.path.join(_outdir(args), "certificate.json") if args.output_dir else None)
    return EXIT_OK if cert.admissible else EXIT_FAIL


def cmd_simulate(args) -> int:
    from .sim import wp_bound_series, write_trajectory_csv

    config = load_config(args.scenario)
    if args.seed is not None:
        config["seed"] = args.seed
    scn = build_scenario(config)
    cert = scn.certificate()
    if not cert.admissible:
        _emit({"error": "boundary law not admissible", **cert.as_dict()})
        return EXIT_FAIL

    traj = scn.simulate()
    out = _outdir(args)
    csv_path = os.path.join(out, "trajectory.csv")
    write_trajectory_csv(traj, csv_path)

    summary = {
        "final_energy": float(traj.energy[-1]),
        "peak_energy": float(traj.ledger["peak_energy"]),
        "max_ledger_residual": traj.ledger["max_residual"],
        "ledger_partial": traj.ledger["partial"],
        "records": int(len(traj.times)),
        "csv": csv_path,
    }
    if cert.strict and cert.c_t is not None:
        chk = wp_bound_series(traj, cert.c_t)
        summary["wp_bound_satisfied"] = chk["satisfied"]
        summary["wp_bound_max_ratio"] = chk["max_ratio"]
        summary["c_t"] = cert.c_t

    if args.export_operators:
        _export_operators(scn, out)
        summary["operators_dir"] = os.path.join(out, "operators")
    if args.export_fields:
        path = os.path.join(out, "fields.vtk")
        _export_fields_vtk(scn, traj.x_final, path)
        summary["fields_vtk"] = path

    _emit(summary, os.path.join(out, "summary.json"))
    return EXIT_OK


def cmd_converge(args) -> int:
    config = load_config(args.scenario)
    levels = args.levels
    scn = build_scenario(config)

    rows = []
    rows += _coupling_convergence(config, levels, args.threads)
    rows += _trace_constant_row(scn)
    rows += _quadrature_convergence(config, levels)
    rows += _ledger_convergence(scn, levels, args.threads)

    width = max(len(r[0]) for r in rows)
    print(f"{'study':<{width}}  errors | observed orders")
    payload = []
    for name, errs, orders in rows:
        order_txt = ", ".join(f"{o:.2f}" for o in orders) if orders else "-"
        print(f"{name:<{width}}  " + "  ".join(f"{e:8.2e}" for e in errs)
              + f" | {order_txt}")
        payload.append({"study": name, "errors": list(errs), "orders": list(orders)})
    if args.output_dir:
        _emit({"rows": payload}, os.path.join(_outdir(args), "converge.json"))
    return EXIT_OK


def _orders(errs):
    out = []
    for a, b in zip(errs[:-1], errs[1:]):
        out.append(float(np.log2(a / b)) if b > 0 and a > 0 else float("inf"))
    return out


def _coupling_convergence(config, levels, threads):
    from .coupling import assemble_P_el, assemble_P_mag
    from .geometry import build_chart, build_frame
    from .scenario import _build_cable
    from .tline import build_line_grid

    cable = _build_cable(config["geometry"]["cables"][0])
    base_n, base_m = 8, 12

    def level(j):
        n, m = base_n * 2 ** j, base_m * 2 ** j
        frame = build_frame(cable, n_eta=(np.arange(n) + 0.5) / n)
        chart = build_chart(cable, frame, n, m)
        lg = build_line_grid(n, 1)
        cp = assemble_P_el([chart], lg)
        Pq = assemble_P_mag(cp, mode="quadrature")
        pts = chart.quad_points()
        g = np.stack([np.sin(3 * pts[:, 1]), np.cos(2 * pts[:, 0]), pts[:, 2]],
                     axis=1).reshape(-1)
        return float(np.abs(cp.Pmag @ g - Pq @ g).max())

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        diffs = list(pool.map(level, range(levels)))
    return [("pmag_adjoint_vs_quadrature", diffs, _orders(diffs))]


def _trace_constant_row(scn):
    """Constant tangential fields are reproduced exactly by the surface
    trace interpolation (single-row study, zero error expected)."""
    from .maxwell import surface_trace

    R_tan, _, _ = surface_trace(scn.grid, scn.charts)
    dirs = scn.grid.edge_direction(scn.grid.free_edges)
    errs = []
    for c in range(3):
        e = (dirs == c).astype(float)
        vals = (R_tan @ e).reshape(-1, 3)
        normals = np.concatenate([ch.normal.reshape(-1, 3) for ch in scn.charts])
        unit = np.zeros(3)
        unit[c] = 1.0
        proj = unit[None, :] - normals * normals[:, c:c + 1]
        errs.append(float(np.abs(vals - proj).max()))
    return [("trace_constant_field", [max(e, 1e-300) for e in errs], [])]


def _quadrature_convergence(config, levels):
    from .geometry import build_chart, build_frame
    from .scenario import _build_cable

    cable = _build_cable(config["geometry"]["cables"][0])
    vals = []
    n_theta = 64         # fixed: isolates the second-order eta rule
    for j in range(levels + 1):
        n = 8 * 2 ** j
        frame = build_frame(cable, n_eta=(np.arange(n) + 0.5) / n)
        chart = build_chart(cable, frame, n, n_theta)
        f = np.cos(2 * chart.points[..., 0] + chart.points[..., 1]
                   + 3 * chart.points[..., 2])
        vals.append(float((chart.weights * f).sum()))
    ref = vals[-1]
    errs = [max(abs(v - ref), 1e-300) for v in vals[:-1]]
    return [("surface_quadrature", errs, _orders(errs))]


def _ledger_convergence(scn, levels, threads):
    from .sim import run

    if scn.sim_config is None:
        raise ConfigError("converge needs a sim section for the ledger study")
    loop = scn.closed_loop()
    x0 = scn.initial_state()

    def level(j):
        import dataclasses
        cfg = dataclasses.replace(scn.sim_config, dt=scn.sim_config.dt / 2 ** j)
        traj = run(loop, cfg, x0=x0, W_C_full=scn.W_C_full)
        if traj.ledger["partial"]:
            raise ConfigError("ledger study needs a co-located output")
        return traj.ledger["max_residual"] / max(traj.ledger["peak_energy"], 1e-300)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        errs = list(pool.map(level, range(levels)))
    return [("ledger_residual", errs, _orders(errs))]


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------

def _export_operators(scn, out):
    import scipy.io as sio

    opdir = os.path.join(out, "operators")
    os.makedirs(opdir, exist_ok=True)
    mats = {"J": scn.bundle.J, "Rd": scn.bundle.Rd, "Hd": scn.bundle.Hd,
            "M": scn.bundle.M, "B1": scn.bundle.B1, "B2": scn.bundle.B2}
    if scn.coupling is not None:
        mats["Pel"] = scn.coupling.Pel
        mats["Pmag"] = scn.coupling.Pmag
    for name, mat in mats.items():
        sio.mmwrite(os.path.join(opdir, name), mat.tocoo())


def _export_fields_vtk(scn, x, path):
    """Cell-averaged |E| and |B| on the structured grid, legacy ASCII VTK."""
    grid = scn.grid
    lay = scn.bundle.layout
    e = scn.bundle.effort(x)
    nx, ny, nz = grid.n

    def cell_average(values, ids, midf):
        acc = np.zeros(grid.n)
        cnt = np.zeros(grid.n)
        mids = midf(ids)
        idx = np.clip(((mids - grid.origin) / grid.h - 0.5).astype(int), 0,
                      np.array(grid.n) - 1)
        np.add.at(acc, (idx[:, 0], idx[:, 1], idx[:, 2]), np.abs(values))
        np.add.at(cnt, (idx[:, 0], idx[:, 1], idx[:, 2]), 1.0)
        return np.where(cnt > 0, acc / np.maximum(cnt, 1), 0.0)

    emag = cell_average(np.asarray(e[lay.sl_E]), grid.free_edges, grid.edge_midpoints)
    bmag = cell_average(np.asarray(x[lay.sl_H]), grid.dof_faces, grid.face_midpoints)

    with open(path, "w") as f:
        f.write("# vtk DataFile Version 3.0\ncablefield snapshot\nASCII\n")
        f.write("DATASET STRUCTURED_POINTS\n")
        f.write(f"DIMENSIONS {nx} {ny} {nz}\n")
        f.write(f"ORIGIN {grid.origin[0]} {grid.origin[1]} {grid.origin[2]}\n")
        f.write(f"SPACING {grid.h} {grid.h} {grid.h}\n")
        f.write(f"POINT_DATA {nx * ny * nz}\n")
        for name, data in (("E_mag", emag), ("B_mag", bmag)):
            f.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in data.transpose(2, 1, 0).reshape(-1):
                f.write(f"{v:.9g}\n")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cablefield",
                                description="coupled field-cable simulator")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("validate", cmd_validate), ("certify", cmd_certify),
                     ("simulate", cmd_simulate), ("converge", cmd_converge)):
        q = sub.add_parser(name)
        q.add_argument("scenario", help="path to the scenario JSON file")
        q.add_argument("--output-dir", default=None)
        q.add_argument("--threads", type=int, default=1)
        q.add_argument("--seed", type=int, default=None)
        q.add_argument("--export-operators", action="store_true")
        q.add_argument("--export-fields", action="store_true")
        q.set_defaults(func=fn)
    sub.choices["converge"].add_argument("--levels", type=int, default=3)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CableFieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
