"""Command-line front end.

Exit codes: 0 ok, 2 usage, 3 validation failure, 4 sector cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .circuit import CircuitError, gate_count
from .dense import SectorCapExceeded, build_dense, enumerate_sector, norms
from .enumerator import ModelIndex, enumerate_semantic, exact_sparsity
from .expr import DomainError, PoleError
from .fock import (BitLayout, Cutoffs, FockError, decode, encode, from_hex, parse_state,
                   to_hex, validate)
from .library import BUILTINS, builtin
from .matrix_element import matrix_element
from .model import STANDARD_PARTICLES, ModelError
from .modelfile import ParseError, parse_model
from .resources import ResourceDomainError, estimate, sparsity_bound
from .walk import WalkError, build_T, verify_walk_overlap

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_CAP = 0, 2, 3, 4

GATE_COLUMNS = ('K', 'step1_ops', 'step2_ops', 'step3_ops', 'step4_ops', 'uncompute_ops', 'total')


class UsageError(Exception):
    pass


# slope fits

@dataclass
class SlopeFit:
    points: list        # (log K, log count)
    slope: float
    intercept: float
    window: list        # K values used in the fit
    residual: float


def fit_slope(points, window=0.5):
    """Least-squares log-log slope over the top ``window`` fraction of K
    values (at least two points)."""
    pts = sorted((float(K), float(c)) for K, c in points)
    if len(pts) < 4:
        raise ValueError('a slope fit needs at least 4 points')
    if any(K <= 0 or c <= 0 for K, c in pts):
        raise ValueError('K values and counts must be positive')
    if not 0 < window <= 1:
        raise ValueError('window fraction must lie in (0, 1]')
    n = max(2, math.ceil(window * len(pts)))
    top = pts[-n:]
    x = np.log([K for K, _ in top])
    y = np.log([c for _, c in top])
    if np.ptp(x) == 0:
        raise ValueError('all K values in the window are equal')
    if np.ptp(np.log([c for _, c in pts])) == 0:
        raise ValueError('constant series has no meaningful slope')
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return SlopeFit([(math.log(K), math.log(c)) for K, c in pts], float(slope), float(intercept),
                    [K for K, _ in top], float(math.sqrt(np.mean(resid ** 2))))


# argument helpers

def parse_k_range(text):
    """'8..128' doubles from 8 to 128; '2,3,5' is a list; '6' a single value."""
    text = text.strip()
    try:
        if '..' in text:
            lo, hi = (int(t) for t in text.split('..'))
            if lo < 1 or hi < lo:
                raise UsageError(f'bad K range {text!r}')
            out = []
            K = lo
            while K <= hi:
                out.append(K)
                K *= 2
            return out
        vals = [int(t) for t in text.split(',') if t.strip()]
    except ValueError:
        raise UsageError(f'bad K value {text!r}') from None
    if not vals or min(vals) < 1:
        raise UsageError(f'bad K value {text!r}')
    return vals


def load_model(source, check_hermitian=True):
    if source is None:
        return None
    if source.startswith('builtin:'):
        name = source.split(':', 1)[1]
        if name not in BUILTINS:
            raise UsageError(f'unknown builtin {name!r}; choose from {", ".join(BUILTINS)}')
        return builtin(name)
    try:
        with open(source) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f'cannot read model file {source}: {exc.strerror}') from None
    return parse_model(text, check_hermitian=check_hermitian)


def cutoffs_at(spec, K, I=None, W=None):
    """Cutoffs of a model run at resolution K.  Equal-time windows become
    [-L, L] with L = ceil(K/2) - 1, I = K and W = K."""
    c = spec.cutoffs
    if c.light_front_q:
        out = Cutoffs.light_front(K, transverse=c.per_dim[1:], n_types=len(spec.particle_types()))
    else:
        lam = max(0, math.ceil(K / 2) - 1)
        out = Cutoffs.equal_time(lam, K, K, dims=c.dims)
    if I is not None or W is not None:
        out = Cutoffs(out.per_dim, W or out.occupancy_cap, I or out.register_count, out.quantization)
    return out


def apply_overrides(spec, args, K=None):
    params = dict(spec.params)
    for item in args.param or []:
        name, sep, value = item.partition('=')
        if not sep:
            raise UsageError(f'--param expects name=value, got {item!r}')
        if name not in params:
            raise ModelError(f'model {spec.name} has no parameter {name!r}')
        try:
            params[name] = float(value)
        except ValueError:
            raise ModelError(f'parameter {name} needs a number, got {value!r}') from None
    cut = spec.cutoffs
    if K is not None:
        cut = cutoffs_at(spec, K, args.I, args.W)
    elif args.I is not None or args.W is not None:
        cut = Cutoffs(cut.per_dim, args.W or cut.occupancy_cap, args.I or cut.register_count,
                      cut.quantization)
    return spec.replace(cutoffs=cut, params=params)


def model_for(args, K=None):
    spec = load_model(args.model)
    if spec is None:
        raise UsageError('--model is required')
    return apply_overrides(spec, args, K if K is not None else _single_k(args))


def _single_k(args):
    if getattr(args, 'K', None) is None:
        return None
    ks = parse_k_range(args.K)
    if len(ks) != 1:
        raise UsageError('this command takes a single K')
    return ks[0]


def _particles(spec):
    if spec is None:
        return dict(STANDARD_PARTICLES)
    return dict(spec.particles)


def _layout(args):
    """Layout and particle dict for encode/decode."""
    spec = load_model(args.model) if args.model else None
    K = _single_k(args)
    if spec is not None:
        spec = apply_overrides(spec, args, K)
        return BitLayout.build(spec.cutoffs, spec.particle_types()), _particles(spec), spec.cutoffs
    particles = dict(STANDARD_PARTICLES)
    if K is None:
        raise UsageError('give --K or --model')
    cut = Cutoffs.light_front(K, n_types=len(set(particles.values())))
    if args.I is not None or args.W is not None:
        cut = Cutoffs(cut.per_dim, args.W or cut.occupancy_cap, args.I or cut.register_count,
                      cut.quantization)
    return BitLayout.build(cut, particles.values()), particles, cut


def read_state(text, spec):
    """A state literal, or 0x-prefixed little-endian hex in the model's layout."""
    text = text.strip()
    if text.lower().startswith('0x'):
        layout = BitLayout.build(spec.cutoffs, spec.particle_types())
        return decode(from_hex(text[2:]), layout)
    return parse_state(text, _particles(spec))


def check_state(state, cutoffs):
    problems = validate(state, cutoffs)
    if problems:
        raise FockError(f'invalid state {state}: ' + '; '.join(problems))
    return state


def _total(args, spec):
    if args.total is None:
        return None
    try:
        vals = tuple(int(t) for t in args.total.split(','))
    except ValueError:
        raise UsageError(f'bad --total {args.total!r}') from None
    if len(vals) != spec.cutoffs.dims:
        raise UsageError(f'--total needs {spec.cutoffs.dims} components')
    return vals


# output

def table(rows, header):
    cells = [[str(h) for h in header]] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(header))]
    return '\n'.join('  '.join(c.rjust(w) for c, w in zip(r, widths)).rstrip() for r in cells) + '\n'


def csv_text(rows, header):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return f'{v:.12g}'
    return str(v)


def emit(args, rows, header, out):
    text = csv_text(rows, header) if args.format == 'csv' else table(rows, header)
    if args.output:
        with open(args.output, 'w') as fh:
            fh.write(text)
    else:
        out.write(text)


# subcommands

def cmd_encode(args, out):
    layout, particles, cut = _layout(args)
    state = parse_state(args.state, particles)
    check_state(state, cut)
    bits = encode(state, layout)
    text = to_hex(bits, layout) if args.hex else format(bits, f'0{layout.bits_total}b')
    out.write(text + '\n')


def cmd_decode(args, out):
    layout, _, _ = _layout(args)
    text = args.bits.strip()
    try:
        bits = from_hex(text) if args.hex else int(text, 2)
    except ValueError:
        raise FockError(f'not a {"hex" if args.hex else "binary"} string: {text!r}') from None
    out.write(str(decode(bits, layout)) + '\n')


def cmd_enumerate(args, out):
    spec = model_for(args)
    F = read_state(args.state, spec)
    check_state(F, spec.cutoffs)
    idx = ModelIndex(spec)
    indices = [args.i] if args.i is not None else range(1, idx.k + 1)
    rows = []
    for i in indices:
        G, a, trace = enumerate_semantic(spec, F, i)
        if args.valid and a:
            continue
        name = trace.interaction.name if trace.interaction is not None else '-'
        rows.append((i, name, str(G), a, trace.reason or 'valid'))
    out.write(f'# k = {idx.k}\n')
    emit(args, rows, ('i', 'interaction', 'output', 'a_flag', 'note'), out)


def cmd_matelem(args, out):
    spec = model_for(args)
    F = read_state(args.state, spec)
    G = read_state(args.to, spec)
    check_state(F, spec.cutoffs)
    check_state(G, spec.cutoffs)
    me = matrix_element(spec, F, G)
    rows = [(name, i, v) for name, i, v in me.terms]
    out.write(f'<{G}|H|{F}> = {me.value!r}\n')
    if rows:
        emit(args, rows, ('interaction', 'i', 'value'), out)


def cmd_build_matrix(args, out):
    spec = model_for(args)
    basis = enumerate_sector(spec.cutoffs, spec.particle_types(), total=_total(args, spec))
    H = build_dense(spec, basis)
    Hmax, norm1, _ = norms(H)
    out.write(f'# basis size {len(basis)}, H_max {Hmax!r}, ||H||_1 {norm1!r}\n')
    for n, F in enumerate(basis):
        out.write(f'# {n}: {F}\n')
    rows = [(x, y, float(H[x, y])) for x in range(len(basis)) for y in range(len(basis)) if H[x, y]]
    emit(args, rows, ('row', 'col', 'value'), out)


def cmd_sparsity(args, out):
    spec = model_for(args)
    basis = enumerate_sector(spec.cutoffs, spec.particle_types(), total=_total(args, spec))
    bound = sparsity_bound(spec)
    rows = [(str(F), exact_sparsity(spec, F), bound) for F in basis]
    out.write(f'# index space size {ModelIndex(spec).k}, sparsity bound {bound}\n')
    emit(args, rows, ('state', 'exact', 'bound'), out)


def gatecount_rows(spec, Ks, I=None, W=None):
    rows = []
    for K in Ks:
        t = gate_count(spec, cutoffs_at(spec, K, I, W))
        row = t.row()
        rows.append((K, row['step1_ops'], row['step2_ops'], row['step3_ops'], row['step4_ops'],
                     row['uncompute_ops'], t.total))
    return rows


def cmd_gatecount(args, out):
    spec = load_model(args.model)
    if spec is None:
        raise UsageError('--model is required')
    spec = apply_overrides(spec, args)
    Ks = parse_k_range(args.K)
    rows = gatecount_rows(spec, Ks, args.I, args.W)
    emit(args, rows, GATE_COLUMNS, out)
    if args.csv:
        with open(args.csv, 'w') as fh:
            fh.write(csv_text(rows, GATE_COLUMNS))
    if len(rows) >= 4:
        fit = fit_slope([(r[0], r[-1]) for r in rows], args.window)
        used = ','.join(str(int(K)) for K in fit.window)
        out.write(f'slope {fit.slope:.4f} over K={used} (rms residual {fit.residual:.3g})\n')
    else:
        out.write('slope not fitted: needs at least 4 K values\n')


def cmd_walk_check(args, out):
    spec = model_for(args)
    basis = enumerate_sector(spec.cutoffs, spec.particle_types(), total=_total(args, spec))
    H = build_dense(spec, basis)
    T = build_T(spec, basis, r=args.r, H=H)
    rows = [('basis size', len(basis)), ('index space k', T.k), ('r', T.r), ('||H||_1', T.norm1),
            ('isometry deviation', T.isometry_deviation()),
            ('overlap deviation', verify_walk_overlap(T, H))]
    if (H < 0).any():
        rows.append(('note', 'H has negative entries; overlap check assumes nonnegative H'))
    emit(args, rows, ('quantity', 'value'), out)


def cmd_estimate(args, out):
    spec = model_for(args)
    rep = estimate(spec, args.t, args.eps, Hmax=args.hmax, time_dependent=args.time_dependent)
    out.write('# closed-form estimates with unit constants\n')
    emit(args, rep.rows(), ('quantity', 'value'), out)


def cmd_show_model(args, out):
    spec = load_model(args.model)
    if spec is None:
        raise UsageError('--model is required')
    from .modelfile import print_model
    out.write(print_model(apply_overrides(spec, args, _single_k(args))))


COMMANDS = {
    'encode': cmd_encode,
    'decode': cmd_decode,
    'enumerate': cmd_enumerate,
    'matelem': cmd_matelem,
    'build-matrix': cmd_build_matrix,
    'sparsity': cmd_sparsity,
    'gatecount': cmd_gatecount,
    'walk-check': cmd_walk_check,
    'estimate': cmd_estimate,
    'show-model': cmd_show_model,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--model', help='model file or builtin:NAME')
    common.add_argument('--K', help='resolution: N, a,b,c or a..b (doubling)')
    common.add_argument('--I', type=int, help='override the register count')
    common.add_argument('--W', type=int, help='override the occupancy cap')
    common.add_argument('--param', action='append', help='name=value parameter override')
    common.add_argument('--format', choices=('table', 'csv'), default='table')
    common.add_argument('--output', '--out', dest='output', help='write the table here instead of stdout')
    common.add_argument('--seed', type=int, default=0, help='seed for randomized checks')

    p = argparse.ArgumentParser(prog='fockforge', description='Compact Fock-state oracle toolkit')
    p.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    sub = p.add_subparsers(dest='command', required=True)
    s = sub.add_parser('encode', parents=[common], help='state literal to bitstring')
    s.add_argument('--state', required=True)
    s.add_argument('--hex', action='store_true')
    s = sub.add_parser('decode', parents=[common], help='bitstring to state literal')
    s.add_argument('--bits', required=True)
    s.add_argument('--hex', action='store_true')
    s = sub.add_parser('enumerate', parents=[common], help='run the enumerator over indices')
    s.add_argument('--state', required=True)
    s.add_argument('--i', type=int)
    s.add_argument('--valid', action='store_true', help='list valid indices only')
    s = sub.add_parser('matelem', parents=[common], help='one matrix element')
    s.add_argument('--state', '--ket', dest='state', required=True)
    s.add_argument('--to', '--bra', dest='to', required=True)
    for name in ('build-matrix', 'sparsity', 'walk-check'):
        s = sub.add_parser(name, parents=[common])
        s.add_argument('--total', help='fix total momentum, comma separated per dimension')
        if name == 'walk-check':
            s.add_argument('--r', type=float)
    s = sub.add_parser('gatecount', parents=[common], help='oracle gate tally over K')
    s.add_argument('--csv', help='write the per-step CSV here')
    s.add_argument('--window', type=float, default=0.5, help='top fraction of K values to fit')
    s = sub.add_parser('estimate', parents=[common], help='closed-form resource estimate')
    s.add_argument('--t', type=float, required=True)
    s.add_argument('--eps', type=float, required=True)
    s.add_argument('--hmax', type=float)
    s.add_argument('--time-dependent', action='store_true')
    sub.add_parser('show-model', parents=[common], help='print a model in file syntax')
    return p


VALIDATION_ERRORS = (FockError, ModelError, ParseError, WalkError, ResourceDomainError,
                     CircuitError, PoleError, DomainError, ValueError, KeyError)


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f'fockforge: {exc}', file=sys.stderr)
        return EXIT_USAGE
    except SectorCapExceeded as exc:
        print(f'fockforge: {exc}', file=sys.stderr)
        return EXIT_CAP
    except VALIDATION_ERRORS as exc:
        print(f'fockforge: {exc}', file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
