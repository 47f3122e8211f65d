#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
QSP Workbench - Quantum signal processing synthesis and amplitude estimation bounds
Main application file (app.py) - command line entry point
"""

import functools
import json
import logging
import sys
from typing import Callable, Dict, List, Optional

import click
import numpy as np

# Import configuration
try:
    import config
except ImportError:
    class MockConfig:
        DEFAULT_SEED = 42
        DEFAULT_JOBS = 1
        DEFAULT_TOL = 1e-8
        VERIFY_TOL = 1e-6
        LOG_LEVEL = 'INFO'
    config = MockConfig()
    logging.warning("config.py not found, using default settings.")

from modules import bivariate, qae, qspu, qsvt
from utils.errors import PreconditionError, QspError, VerificationError
from utils.numerics import make_rng, parallel_starmap, random_contraction
from utils.storage import artifact, csv_text, decode_matrix, decode_poly, encode_poly, load_json, save_csv, save_json

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
# pi / sqrt(6), the limiting N * delta_x of the sine-state family
STD_CONSTANT = np.pi / np.sqrt(6.0)


# --- option parsing -------------------------------------------------------------

def parse_int_list(text: str) -> List[int]:
    """'16,32,64' or the doubling range '16..512'."""
    text = str(text).strip()
    try:
        if '..' in text:
            lo, hi = (int(part) for part in text.split('..', 1))
            if lo <= 0 or hi < lo:
                raise ValueError
            out = []
            while lo <= hi:
                out.append(lo)
                lo *= 2
            return out
        return [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected integers like '16,32,64' or '16..512', got {text!r}")


def parse_float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in str(text).split(',') if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {text!r}")


def usage_error(e: click.ClickException) -> Dict:
    """Status dict for a command-line usage error."""
    return {"status": "error", "error": type(e).__name__, "kind": "usage", "message": e.format_message()}


def handle_errors(func: Callable) -> Callable:
    """Maps failures to exit codes (1 verification, 2 input, 3 numerical) with a JSON error on stderr."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except VerificationError as e:
            code, payload = 1, e.to_dict()
        except PreconditionError as e:
            code, payload = 2, e.to_dict()
        except QspError as e:
            logger.error(f"Numerical failure in {func.__name__}: {e}", exc_info=True)
            code, payload = 3, e.to_dict()
        except click.ClickException as e:
            code, payload = 2, usage_error(e)
        except (OSError, ValueError, KeyError) as e:
            code = 2
            payload = {"status": "error", "error": type(e).__name__, "message": str(e)}
        click.echo(json.dumps(payload), err=True)
        sys.exit(code)
    return wrapper


def emit_json(out: Optional[str], kind: str, payload: Dict, timestamp: bool) -> None:
    if out:
        save_json(out, kind, payload, timestamp=timestamp)
    else:
        click.echo(json.dumps(artifact(kind, payload, timestamp), indent=2))


def emit_csv(out: Optional[str], header, rows) -> None:
    if out:
        save_csv(out, header, rows)
    else:
        click.echo(csv_text(header, rows), nl=False)


def _unwrap(data: Dict, key: str) -> Dict:
    """Artifacts written by this tool nest their payload; bare objects are accepted too."""
    return data[key] if isinstance(data, dict) and key in data else data


out_option = click.option('--out', type=click.Path(dir_okay=False), default=None,
                          help="Output file (stdout when omitted).")
timestamp_option = click.option('--timestamp', is_flag=True, default=False,
                                help="Add a creation timestamp to JSON output.")


# --- command group --------------------------------------------------------------

@click.group()
@click.option('--seed', type=int, default=config.DEFAULT_SEED, show_default=True, help="Seed for randomized inputs.")
@click.option('--jobs', type=click.IntRange(min=1), default=config.DEFAULT_JOBS, show_default=True,
              help="Worker processes for sweeps.")
@click.option('--tol', type=float, default=config.DEFAULT_TOL, show_default=True,
              help="Spectral factorization tolerance.")
@click.option('--log-level', type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']),
              default=config.LOG_LEVEL, show_default=True)
@click.pass_context
def cli(ctx, seed, jobs, tol, log_level):
    """QSP Workbench: U(N) signal processing synthesis and amplitude estimation bounds."""
    logging.basicConfig(level=getattr(logging, log_level), format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger().setLevel(getattr(logging, log_level))
    ctx.obj = {"seed": seed, "jobs": jobs, "tol": tol}


# --- QSP over U(N) --------------------------------------------------------------

@cli.command('synth-qspu')
@click.option('--input', 'input_path', required=True, type=click.Path(dir_okay=False), help="PolyMatrix JSON.")
@click.option('--laurent', is_flag=True, help="Target has negative powers; use double-headed gates.")
@click.option('--unitary', is_flag=True, help="Target is square and unitary on the circle; no completion.")
@out_option
@timestamp_option
@click.pass_context
@handle_errors
def synth_qspu(ctx, input_path, laurent, unitary, out, timestamp):
    """Synthesize seed and projectors for a polynomial matrix target."""
    target = decode_poly(_unwrap(load_json(input_path), "target"))
    if laurent:
        params, info, _ = qspu.synthesize_laurent(target, ctx.obj["tol"])
    elif unitary:
        params = qspu.synthesize_unitary(target)
        info = qspu.EmbeddingInfo(target.rows, target.cols, 0, params.n_dim)
    else:
        params, info = qspu.complete_and_synthesize(target, ctx.obj["tol"])
    payload = {"params": params.to_dict(), "embedding": info.to_dict(), "laurent": laurent,
               "ranks": params.ranks()}
    emit_json(out, "qspu-params", payload, timestamp)


@cli.command('verify-qspu')
@click.option('--params', 'params_path', required=True, type=click.Path(dir_okay=False))
@click.option('--target', 'target_path', required=True, type=click.Path(dir_okay=False))
@click.option('--grid', type=click.IntRange(min=1), default=33, show_default=True)
@handle_errors
def verify_qspu(params_path, target_path, grid):
    """Compare the realized designated block with the target (exit 0 iff both errors <= 1e-6)."""
    doc = load_json(params_path)
    params = qspu.QspuParams.from_dict(_unwrap(doc, "params"))
    info = qspu.EmbeddingInfo.from_dict(doc["embedding"]) if "embedding" in doc else None
    target = decode_poly(_unwrap(load_json(target_path), "target"))
    laurent = bool(doc.get("laurent", False))
    report = qspu.verify_params(params, target, info, grid, laurent=laurent)
    click.echo(json.dumps(report))
    if not report["ok"]:
        raise VerificationError("realized block differs from the target", **report)


# --- QSVT -----------------------------------------------------------------------

@cli.command('synth-qsvt')
@click.option('--input', 'input_path', required=True, type=click.Path(dir_okay=False),
              help="PolyMatrix JSON with monomial coefficients in x (lo = 0).")
@click.option('--degree', type=int, default=None, help="Circuit length (defaults to the target degree).")
@out_option
@timestamp_option
@click.pass_context
@handle_errors
def synth_qsvt(ctx, input_path, degree, out, timestamp):
    """Complete a parity polynomial matrix and synthesize its ancilla unitaries."""
    poly = decode_poly(_unwrap(load_json(input_path), "target"))
    if poly.lo != 0:
        raise PreconditionError(f"QSVT targets are ordinary polynomials in x (lo = {poly.lo})", lo=poly.lo)
    target = qsvt.RealPolyMatrix(poly.coeffs)
    _, _, params = qsvt.complete_qsvt(target, degree)
    payload = {"params": params.to_dict(), "target": encode_poly(poly)}
    emit_json(out, "qsvt-params", payload, timestamp)


@cli.command('verify-qsvt')
@click.option('--params', 'params_path', required=True, type=click.Path(dir_okay=False))
@click.option('--matrix', 'matrix_path', type=click.Path(dir_okay=False), default=None,
              help="Complex matrix JSON; a seeded random contraction when omitted.")
@click.option('--rows', type=int, default=3, show_default=True)
@click.option('--cols', type=int, default=2, show_default=True)
@click.option('--verify-tol', type=float, default=config.VERIFY_TOL, show_default=True)
@click.pass_context
@handle_errors
def verify_qsvt_cmd(ctx, params_path, matrix_path, rows, cols, verify_tol):
    """Run the circuit on a dilation of A and compare with the singular value oracle."""
    doc = load_json(params_path)
    params = qsvt.QsvtParams.from_dict(_unwrap(doc, "params"))
    target = qsvt.RealPolyMatrix(decode_poly(doc["target"]).coeffs) if "target" in doc else None
    if matrix_path:
        a = decode_matrix(_unwrap(load_json(matrix_path), "matrix"))
    else:
        a = random_contraction(make_rng(ctx.obj["seed"]), rows, cols)
    report = qsvt.verify_qsvt(params, a, target, verify_tol)
    click.echo(json.dumps(report))
    if not report["ok"]:
        raise VerificationError("circuit differs from the singular value transformation", **report)


# --- bivariate ------------------------------------------------------------------

@cli.command('bivar-approx')
@click.option('--f', 'f_path', required=True, type=click.Path(dir_okay=False),
              help="Bivariate JSON with monomial coefficients of x, y.")
@click.option('--delta', type=float, required=True)
@click.option('--eps', type=float, required=True)
@out_option
@timestamp_option
@handle_errors
def bivar_approx(f_path, delta, eps, out, timestamp):
    """Laurent approximation g(w, v) of a power series f(x, y)."""
    f = bivariate.BivariatePoly.from_dict(_unwrap(load_json(f_path), "f"))
    g, d, big_l = bivariate.approximate_bivariate(f, delta, eps)
    payload = {"g": g.to_dict(), "d": d, "L": big_l, "delta": delta, "eps": eps,
               "one_norm": g.one_norm, "f_one_norm": f.one_norm}
    emit_json(out, "bivariate-approximation", payload, timestamp)


@cli.command('bivar-compose')
@click.option('--g', 'g_path', required=True, type=click.Path(dir_okay=False))
@click.option('--w', 'w_angle', type=float, required=True, help="Angle of w = e^{i w} (radians).")
@click.option('--v', 'v_angle', type=float, required=True, help="Angle of v = e^{i v} (radians).")
@click.option('--convention', type=click.Choice(['half', 'full']), default='half', show_default=True)
@click.pass_context
@handle_errors
def bivar_compose(ctx, g_path, w_angle, v_angle, convention):
    """Compose the product block encodings of g at scalar w, v and print block and reference."""
    g = bivariate.BivariatePoly.from_dict(_unwrap(load_json(g_path), "g"))
    dec = bivariate.decompose_products(g)
    w, v = np.exp(1j * w_angle), np.exp(1j * v_angle)
    block = complex(bivariate.compose_block_encodings(dec, w, v, convention, ctx.obj["tol"])[0, 0])
    if convention == 'full':
        w, v = np.sqrt(w), np.sqrt(v)
    reference = complex(g.evaluate(w, v) / dec.scale) if not dec.empty else 0j
    error = abs(block - reference)
    click.echo(json.dumps({"block": [block.real, block.imag], "reference": [reference.real, reference.imag],
                           "scale": dec.scale, "terms": len(dec.terms), "error": error}))
    if error > config.VERIFY_TOL:
        raise VerificationError(f"composed block differs from g / scale by {error:.3e}", error=error)


# --- amplitude estimation sweeps ------------------------------------------------

def _y_grid(points: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, points)


def _r_rows(ns: List[int], points: int, jobs: int) -> List[tuple]:
    args = [(n, float(y)) for n in ns for y in _y_grid(points)]
    values = parallel_starmap(qae.r_of_y, args, jobs)
    return [(n, y, r) for (n, y), r in zip(args, values)]


def _reps_rows(ns: List[int], eps_times_n: float, points: int, jobs: int) -> List[tuple]:
    args = [(n, float(y), eps_times_n / n) for n in ns for y in _y_grid(points)]
    values = parallel_starmap(qae.r_eps_of_y, args, jobs)
    return [(n, eps, y, r) for (n, y, eps), r in zip(args, values)]


def _family(name: str, n: int) -> qae.ProbabilityFamily:
    if name == 'sine':
        return qae.qpe_sine_family(n)
    return qae.amplitude_amplification_family(max((n - 1) // 2, 0))


def _std_row(name: str, n: int) -> tuple:
    fam = _family(name, n)
    summary = qae.bayes_and_errors(fam)
    return fam.N, summary.delta_x, summary.delta_x * fam.N / STD_CONSTANT


def _window_row(name: str, n: int, delta: float) -> tuple:
    fam = _family(name, n)
    eps = qae.window_epsilon(fam, delta)
    return fam.N, delta, eps, fam.N * eps


def _delta_bound_row(n: int, delta: float) -> tuple:
    eps = qae.eps_for_delta(n, delta)
    return n, delta, eps, n * eps


def _delta_curve_row(n: int, n_eps: float) -> tuple:
    return n, n_eps, qae.delta_tilde(n, n_eps / n)


@cli.command('qae-r')
@click.option('--N', 'n_text', default='128', show_default=True, help="Degrees, e.g. 32,64 or 16..512.")
@click.option('--ygrid', type=click.IntRange(min=2), default=101, show_default=True)
@out_option
@click.pass_context
@handle_errors
def qae_r(ctx, n_text, ygrid, out):
    """Minimum normalized variance r(y). Columns: N, y, r."""
    emit_csv(out, ("N", "y", "r"), _r_rows(parse_int_list(n_text), ygrid, ctx.obj["jobs"]))


@cli.command('qae-reps')
@click.option('--N', 'n_text', default='128', show_default=True)
@click.option('--eps-times-N', 'eps_times_n', type=float, default=3.0, show_default=True)
@click.option('--ygrid', type=click.IntRange(min=2), default=101, show_default=True)
@out_option
@click.pass_context
@handle_errors
def qae_reps(ctx, n_text, eps_times_n, ygrid, out):
    """Window cost r_eps(y) with eps = c / N. Columns: N, eps, y, r_eps."""
    emit_csv(out, ("N", "eps", "y", "r_eps"), _reps_rows(parse_int_list(n_text), eps_times_n, ygrid, ctx.obj["jobs"]))


@cli.command('qae-delta-bound')
@click.option('--N', 'n_text', default='1024', show_default=True)
@click.option('--delta', 'delta_text', default='0.1,0.05,0.01', show_default=True)
@out_option
@click.pass_context
@handle_errors
def qae_delta_bound(ctx, n_text, delta_text, out):
    """Smallest window half-width eps allowed by the lower bound. Columns: N, delta, eps, N_eps."""
    args = [(n, d) for n in parse_int_list(n_text) for d in parse_float_list(delta_text)]
    rows = parallel_starmap(_delta_bound_row, args, ctx.obj["jobs"])
    emit_csv(out, ("N", "delta", "eps", "N_eps"), rows)


@cli.command('qae-std')
@click.option('--family', type=click.Choice(['sine', 'aa']), default='sine', show_default=True)
@click.option('--N', 'n_text', default='16..512', show_default=True)
@out_option
@click.pass_context
@handle_errors
def qae_std(ctx, family, n_text, out):
    """Bayesian standard deviation error. Columns: N, delta_x, ratio = N delta_x / (pi / sqrt 6)."""
    rows = parallel_starmap(_std_row, [(family, n) for n in parse_int_list(n_text)], ctx.obj["jobs"])
    emit_csv(out, ("N", "delta_x", "ratio"), rows)


@cli.command('qae-window')
@click.option('--family', type=click.Choice(['sine', 'aa']), default='sine', show_default=True)
@click.option('--N', 'n_text', default='256', show_default=True)
@click.option('--delta', 'delta_text', default='0.1,0.05,0.01', show_default=True)
@out_option
@click.pass_context
@handle_errors
def qae_window(ctx, family, n_text, delta_text, out):
    """Achieved window half-width eps_delta of a family. Columns: N, delta, eps, N_eps."""
    args = [(family, n, d) for n in parse_int_list(n_text) for d in parse_float_list(delta_text)]
    emit_csv(out, ("N", "delta", "eps", "N_eps"), parallel_starmap(_window_row, args, ctx.obj["jobs"]))


@cli.command('qae-build')
@click.option('--family', type=click.Choice(['sine', 'aa']), default='sine', show_default=True)
@click.option('--N', 'n', type=click.IntRange(min=1), default=8, show_default=True)
@out_option
@timestamp_option
@handle_errors
def qae_build(family, n, out, timestamp):
    """Synthesize a circuit whose outcome distribution on W(theta) is the family."""
    fam = _family(family, n)
    params = qae.build_qae_circuit(fam)
    payload = {"family": family, "N": fam.N, "outcomes": fam.size,
               "members": [m.coeffs.tolist() for m in fam.members], "params": params.to_dict()}
    emit_json(out, "qae-circuit", payload, timestamp)


# --- figure series --------------------------------------------------------------

@cli.group('fig')
def fig():
    """CSV series behind the bound and error plots."""


@fig.command('ry')
@click.option('--N', 'n_text', default='32,64,128,256', show_default=True)
@click.option('--ygrid', type=click.IntRange(min=2), default=41, show_default=True)
@out_option
@click.pass_context
@handle_errors
def fig_ry(ctx, n_text, ygrid, out):
    """Columns: N, y, N2r = N^2 r(y), reference = pi^2 y (1 - y)."""
    rows = [(n, y, n * n * r, np.pi ** 2 * y * (1 - y))
            for n, y, r in _r_rows(parse_int_list(n_text), ygrid, ctx.obj["jobs"])]
    emit_csv(out, ("N", "y", "N2r", "reference"), rows)


@fig.command('std')
@click.option('--N', 'n_text', default='16..512', show_default=True)
@out_option
@click.pass_context
@handle_errors
def fig_std(ctx, n_text, out):
    """Columns: N, sine_ratio, aa_ratio (N delta_x / (pi / sqrt 6) per family)."""
    ns = parse_int_list(n_text)
    sine = parallel_starmap(_std_row, [('sine', n) for n in ns], ctx.obj["jobs"])
    grover = parallel_starmap(_std_row, [('aa', n) for n in ns], ctx.obj["jobs"])
    emit_csv(out, ("N", "sine_ratio", "aa_ratio"), [(n, s[2], a[2]) for n, s, a in zip(ns, sine, grover)])


@fig.command('reps')
@click.option('--N', 'n_text', default='32,64,128', show_default=True)
@click.option('--eps-times-N', 'eps_times_n', type=float, default=3.0, show_default=True)
@click.option('--ygrid', type=click.IntRange(min=2), default=41, show_default=True)
@out_option
@click.pass_context
@handle_errors
def fig_reps(ctx, n_text, eps_times_n, ygrid, out):
    """Columns: N, eps, y, r_eps."""
    emit_csv(out, ("N", "eps", "y", "r_eps"), _reps_rows(parse_int_list(n_text), eps_times_n, ygrid, ctx.obj["jobs"]))


@fig.command('delta-bound')
@click.option('--N', 'n_text', default='256', show_default=True)
@click.option('--neps-max', type=float, default=4.0, show_default=True)
@click.option('--points', type=click.IntRange(min=2), default=17, show_default=True)
@out_option
@click.pass_context
@handle_errors
def fig_delta_bound(ctx, n_text, neps_max, points, out):
    """Columns: N, N_eps, delta_tilde (lower bound on the window error)."""
    grid = np.linspace(neps_max / points, neps_max, points)
    args = [(n, float(c)) for n in parse_int_list(n_text) for c in grid]
    emit_csv(out, ("N", "N_eps", "delta_tilde"), parallel_starmap(_delta_curve_row, args, ctx.obj["jobs"]))


def run(argv: Optional[List[str]] = None) -> int:
    """Runs one command line and returns its exit code instead of exiting."""
    try:
        cli.main(args=argv, prog_name='qsp-workbench', standalone_mode=False)
    except click.ClickException as e:
        click.echo(json.dumps(usage_error(e)), err=True)
        return 2
    except click.exceptions.Abort:
        return 1
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 0
    return 0


if __name__ == '__main__':
    sys.exit(run())
