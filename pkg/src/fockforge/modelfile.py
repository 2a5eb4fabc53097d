"""Text format for models.

    # comment
    model phi4-lf
    cutoffs light_front K=6
    param lambda = 1.0
    particle b statistics=boson species=0
    interaction scatter: out(k:b, l:b) in(m:b, n:b) coeff = lambda/(16*pi*sqrt(k*l*m*n))

Cutoff lines accept ``K=``, ``Lambda=`` (symmetric window), ``window=lo..hi``
(one per dimension), ``dims=``, ``I=`` and ``W=``.  Coefficients use + - * /,
unary minus, ``^`` with an integer exponent, ``sqrt(x)``, ``omega(n[, mass])``,
registered functions and ``sum(p, body)``.
"""

from __future__ import annotations

import re
import warnings

from .expr import (BUILTIN_ARITY, CONSTANTS, BinOp, Call, Neg, Num, Pow, Sum, Sym,
                   default_functions, to_text)
from .fock import EQUAL_TIME, LIGHT_FRONT, STATISTICS, Cutoffs, FockError, ParticleType
from .model import Interaction, Leg, ModelError, ModelSpec, hermitian_defects


class ParseError(ModelError):
    def __init__(self, message, line, column):
        super().__init__(f'line {line}, column {column}: {message}')
        self.message = message
        self.line = line
        self.column = column


class NonHermitianWarning(UserWarning):
    pass


_TOKEN = re.compile(r'''
    (?P<space>\s+)
  | (?P<number>(?:\d+\.(?!\.)\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\.\.|[()\[\],:=+\-*/^])
''', re.VERBOSE)


class Token:
    __slots__ = ('kind', 'text', 'col')

    def __init__(self, kind, text, col):
        self.kind, self.text, self.col = kind, text, col

    def __repr__(self):
        return f'Token({self.kind}, {self.text!r}, {self.col})'


def tokenize(text, line, start_col=1):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f'unexpected character {text[pos]!r}', line, start_col + pos)
        if m.lastgroup != 'space':
            tokens.append(Token(m.lastgroup, m.group(), start_col + pos))
        pos = m.end()
    tokens.append(Token('end', '', start_col + len(text)))
    return tokens


class _Cursor:
    def __init__(self, tokens, line):
        self.tokens = tokens
        self.i = 0
        self.line = line

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ParseError(message, self.line, tok.col)

    def take(self):
        t = self.tokens[self.i]
        self.i += 1
        return t

    def accept(self, text):
        if self.tok.text == text and self.tok.kind in ('op', 'ident'):
            return self.take()
        return None

    def expect(self, text):
        t = self.accept(text)
        if t is None:
            shown = self.tok.text or 'end of line'
            raise self.error(f'expected {text!r}, found {shown!r}')
        return t

    def ident(self, what='a name'):
        if self.tok.kind != 'ident':
            shown = self.tok.text or 'end of line'
            raise self.error(f'expected {what}, found {shown!r}')
        return self.take()

    def integer(self, what='an integer'):
        sign = -1 if self.accept('-') else 1
        t = self.tok
        if t.kind != 'number' or not t.text.isdigit():
            raise self.error(f'expected {what}')
        self.take()
        return sign * int(t.text)

    def real(self):
        sign = -1.0 if self.accept('-') else 1.0
        t = self.tok
        if t.kind != 'number':
            raise self.error('expected a number')
        self.take()
        return sign * float(t.text)

    def done(self):
        if self.tok.kind != 'end':
            raise self.error(f'unexpected {self.tok.text!r}')


# expressions

class _ExprParser:
    def __init__(self, cur, symbol_sites):
        self.cur = cur
        self.sites = symbol_sites   # list of (name, column, bound dummies)
        self.bound = []

    def parse(self):
        return self.sum_expr()

    def sum_expr(self):
        node = self.term()
        while self.cur.tok.text in ('+', '-') and self.cur.tok.kind == 'op':
            op = self.cur.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.cur.tok.text in ('*', '/') and self.cur.tok.kind == 'op':
            op = self.cur.take().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.cur.accept('-'):
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.cur.accept('^'):
            node = Pow(node, self.cur.integer('an integer exponent'))
        return node

    def atom(self):
        cur = self.cur
        t = cur.tok
        if t.kind == 'number':
            cur.take()
            return Num(float(t.text))
        if cur.accept('('):
            node = self.sum_expr()
            cur.expect(')')
            return node
        if t.kind == 'ident':
            cur.take()
            if t.text == 'sum' and cur.tok.text == '(':
                cur.expect('(')
                dummy = cur.ident('a summation variable').text
                cur.expect(',')
                self.bound.append(dummy)
                body = self.sum_expr()
                self.bound.pop()
                cur.expect(')')
                return Sum(dummy, body)
            if cur.tok.text == '(' and cur.tok.kind == 'op':
                cur.take()
                args = []
                if not cur.accept(')'):
                    args.append(self.sum_expr())
                    while cur.accept(','):
                        args.append(self.sum_expr())
                    cur.expect(')')
                self.sites.append(('call', t.text, t.col, len(args)))
                return Call(t.text, tuple(args))
            if t.text not in self.bound:
                self.sites.append(('sym', t.text, t.col, None))
            return Sym(t.text)
        shown = t.text or 'end of line'
        raise cur.error(f'expected an expression, found {shown!r}')


def parse_expr(text, line=1):
    cur = _Cursor(tokenize(text, line), line)
    node = _ExprParser(cur, []).parse()
    cur.done()
    return node


# model files

def _parse_cutoffs(cur, line):
    q = cur.ident('a quantization').text
    if q not in (LIGHT_FRONT, EQUAL_TIME):
        raise cur.error(f'unknown quantization {q!r}', cur.tokens[cur.i - 1])
    opts = {'window': []}
    while cur.tok.kind != 'end':
        key = cur.ident('a cutoff option')
        cur.expect('=')
        if key.text == 'window':
            lo = cur.integer()
            cur.expect('..')
            hi = cur.integer()
            opts['window'].append((lo, hi))
        elif key.text in ('K', 'Lambda', 'I', 'W', 'dims'):
            if key.text in opts:
                raise cur.error(f'repeated option {key.text!r}', key)
            opts[key.text] = cur.integer()
        else:
            raise cur.error(f'unknown cutoff option {key.text!r}', key)
    try:
        if q == LIGHT_FRONT:
            K = opts.get('K')
            if K is None and not opts['window']:
                raise ParseError('light-front cutoffs need K or window', line, 1)
            if K is not None:
                windows = [(1, K)] + opts['window']
            else:
                windows = opts['window']
            K = windows[0][1]
            if 'I' in opts:
                reg = opts['I']
            else:
                reg = Cutoffs.light_front(K, windows[1:]).register_count
            return Cutoffs(tuple(windows), opts.get('W', K), reg, LIGHT_FRONT)
        if 'Lambda' in opts:
            lam = opts['Lambda']
            windows = [(-lam, lam)] * opts.get('dims', 1)
        else:
            windows = opts['window']
        if not windows:
            raise ParseError('equal-time cutoffs need Lambda or window', line, 1)
        for req in ('I', 'W'):
            if req not in opts:
                raise ParseError(f'equal-time cutoffs need {req}', line, 1)
        return Cutoffs(tuple(windows), opts['W'], opts['I'], EQUAL_TIME)
    except FockError as exc:
        raise ParseError(str(exc), line, 1) from None


def _parse_particle(cur, n_declared):
    handle = cur.ident('a particle name')
    stats = None
    species = n_declared
    qnums = ()
    while cur.tok.kind != 'end':
        key = cur.ident('a particle option')
        cur.expect('=')
        if key.text == 'statistics':
            t = cur.ident('a statistics name')
            if t.text not in STATISTICS:
                raise cur.error(f'unknown statistics {t.text!r}', t)
            stats = t.text
        elif key.text == 'species':
            species = cur.integer('a species id')
        elif key.text == 'qnums':
            cur.expect('(')
            vals = []
            if not cur.accept(')'):
                vals.append(cur.integer())
                while cur.accept(','):
                    vals.append(cur.integer())
                cur.expect(')')
            qnums = tuple(vals)
        else:
            raise cur.error(f'unknown particle option {key.text!r}', key)
    if stats is None:
        raise cur.error('particle needs statistics=...', handle)
    return handle, ParticleType(species, stats, qnums, handle.text)


def _parse_legs(cur, particles):
    cur.expect('(')
    legs = []
    if cur.accept(')'):
        return legs
    while True:
        sym = cur.ident('a leg symbol')
        cur.expect(':')
        ptok = cur.ident('a particle name')
        if ptok.text not in particles:
            raise cur.error(f'unknown particle {ptok.text!r}', ptok)
        legs.append((sym, Leg(sym.text, particles[ptok.text])))
        if cur.accept(')'):
            return legs
        cur.expect(',')


def parse_model(text, check_hermitian=True, functions=None):
    functions = functions if functions is not None else default_functions()
    name = None
    cutoffs = None
    params = {}
    particles = {}
    pending = []    # (line number, interaction, leg tokens, symbol sites)
    names = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split('#', 1)[0]
        if not body.strip():
            continue
        indent = len(body) - len(body.lstrip())
        stripped = body.strip()
        word = stripped.split(None, 1)[0]
        if word == 'model':
            if name is not None:
                raise ParseError('second model header', lineno, indent + 1)
            rest = stripped[len('model'):].strip()
            if not rest or len(rest.split()) != 1:
                raise ParseError('model header needs exactly one name', lineno, indent + 1)
            name = rest
            continue
        if name is None:
            raise ParseError('file must start with a model header', lineno, indent + 1)
        cur = _Cursor(tokenize(body, lineno), lineno)
        head = cur.ident('a directive')
        if head.text == 'cutoffs':
            if cutoffs is not None:
                raise cur.error('repeated cutoffs line', head)
            cutoffs = _parse_cutoffs(cur, lineno)
        elif head.text == 'param':
            pname = cur.ident('a parameter name')
            if pname.text in params:
                raise cur.error(f'repeated parameter {pname.text!r}', pname)
            if pname.text in CONSTANTS:
                raise cur.error(f'{pname.text!r} is a constant', pname)
            cur.expect('=')
            params[pname.text] = cur.real()
            cur.done()
        elif head.text == 'particle':
            handle, ptype = _parse_particle(cur, len(particles))
            if handle.text in particles:
                raise cur.error(f'repeated particle {handle.text!r}', handle)
            particles[handle.text] = ptype
        elif head.text == 'interaction':
            iname = cur.ident('an interaction name')
            if iname.text in names:
                raise cur.error(f'repeated interaction {iname.text!r}', iname)
            names.add(iname.text)
            cur.expect(':')
            cur.expect('out')
            out = _parse_legs(cur, particles)
            cur.expect('in')
            inn = _parse_legs(cur, particles)
            seen = {}
            for tok, leg in out + inn:
                if leg.symbol in seen:
                    raise cur.error(f'repeated leg symbol {leg.symbol!r}', tok)
                seen[leg.symbol] = tok
            cur.expect('coeff')
            cur.expect('=')
            sites = []
            coeff = _ExprParser(cur, sites).parse()
            cur.done()
            x = Interaction(iname.text, tuple(l for _, l in out), tuple(l for _, l in inn), coeff)
            pending.append((lineno, x, sites))
        else:
            raise cur.error(f'unknown directive {head.text!r}', head)
    if name is None:
        raise ParseError('empty model file', 1, 1)
    for lineno, x, sites in pending:
        legs = {leg.symbol for leg in x.legs}
        for kind, sym, col, nargs in sites:
            if kind == 'sym':
                if sym not in legs and sym not in params and sym not in CONSTANTS:
                    raise ParseError(f'unbound symbol {sym!r}', lineno, col)
            elif sym in BUILTIN_ARITY:
                if nargs not in BUILTIN_ARITY[sym]:
                    raise ParseError(f'{sym} takes {BUILTIN_ARITY[sym]} arguments', lineno, col)
            elif sym not in functions:
                raise ParseError(f'unknown function {sym!r}', lineno, col)
    spec = ModelSpec(name, particles, tuple(x for _, x, _ in pending),
                     cutoffs or Cutoffs.light_front(4), params, functions)
    if check_hermitian:
        missing = hermitian_defects(spec)
        if missing:
            warnings.warn(f'model {name}: no Hermitian partner for {", ".join(missing)}',
                          NonHermitianWarning, stacklevel=2)
    return spec


def _cutoff_text(c):
    parts = ['cutoffs', c.quantization]
    wins = list(c.per_dim)
    if c.quantization == LIGHT_FRONT and wins[0][0] == 1:
        parts.append(f'K={wins[0][1]}')
        wins = wins[1:]
    elif c.quantization == EQUAL_TIME and len(set(wins)) == 1 and wins[0][0] == -wins[0][1]:
        parts.append(f'Lambda={wins[0][1]}')
        if len(wins) > 1:
            parts.append(f'dims={len(wins)}')
        wins = []
    parts += [f'window={lo}..{hi}' for lo, hi in wins]
    parts += [f'I={c.register_count}', f'W={c.occupancy_cap}']
    return ' '.join(parts)


def print_model(spec):
    lines = [f'model {spec.name}', _cutoff_text(spec.cutoffs)]
    for pname in sorted(spec.params):
        lines.append(f'param {pname} = {spec.params[pname]!r}')
    for handle, p in spec.particles.items():
        line = f'particle {handle} statistics={p.statistics} species={p.species_id}'
        if p.extra_qnums:
            line += ' qnums=(' + ', '.join(map(str, p.extra_qnums)) + ')'
        lines.append(line)
    handles = {p: h for h, p in spec.particles.items()}
    for x in spec.interactions:
        legs = lambda ls: ', '.join(f'{l.symbol}:{handles[l.particle]}' for l in ls)  # noqa: E731
        lines.append(f'interaction {x.name}: out({legs(x.outgoing)}) in({legs(x.incoming)}) '
                     f'coeff = {to_text(x.coeff)}')
    return '\n'.join(lines) + '\n'
