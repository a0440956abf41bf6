"""Coefficient fields: complex scalar fields of the momentum xi in R^d.

A field is an immutable expression DAG. Leaves are constants, quadratic
polynomials, trigonometric waves and compositions ``f(g(xi))`` with the cutoff
functions of :mod:`skam.cutoff`; inner nodes are sums, products, scalar
multiples, complex conjugates and exact shifts ``xi -> xi + v``.

Evaluation goes through an :class:`Evaluator`, which memoizes every
(node, shift) pair so that the deeply shared DAGs produced by Moyal products
are evaluated in polynomial time.
"""

from __future__ import annotations

import sys

import numpy as np

from . import cutoff

# Moyal products of normal-form generators nest deeply
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


def _offset_key(v) -> tuple:
    # + 0.0 folds -0.0 into 0.0 so equal offsets share a memo slot
    return tuple(float(c) + 0.0 for c in v)


class Evaluator:
    """Memoized evaluation of fields at ``xi + offset`` for a fixed batch of points."""

    def __init__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.ndim == 1:
            xi = xi[None, :]
        self.xi = xi
        self.d = xi.shape[1]
        self.n = xi.shape[0]
        self.origin = (0.0,) * self.d
        self._memo: dict = {}
        self._points: dict = {self.origin: xi}

    def points(self, off: tuple) -> np.ndarray:
        pts = self._points.get(off)
        if pts is None:
            pts = self.xi + np.asarray(off)
            self._points[off] = pts
        return pts

    def __call__(self, node: "Field", off: tuple | None = None) -> np.ndarray:
        if off is None:
            off = self.origin
        key = (id(node), off)
        val = self._memo.get(key)
        if val is None:
            val = node._eval(self, off)
            self._memo[key] = val
        return val


class Field:
    """Base class of coefficient fields. Instances are treated as immutable."""

    __slots__ = ("_dcache",)
    op = "field"

    def __init__(self):
        self._dcache = None

    # -- evaluation ---------------------------------------------------------
    def _eval(self, ev: Evaluator, off: tuple) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def __call__(self, xi) -> np.ndarray:
        return self.evaluate(xi)

    def evaluate(self, xi) -> np.ndarray:
        return Evaluator(xi)(self)

    # -- structure ----------------------------------------------------------
    @property
    def is_zero(self) -> bool:
        return False

    def children(self) -> tuple:
        return ()

    def deriv(self, axis: int) -> "Field":
        """Partial derivative d/dxi_axis, cached on the node."""
        if self._dcache is None:
            self._dcache = {}
        out = self._dcache.get(axis)
        if out is None:
            out = self._deriv(axis)
            self._dcache[axis] = out
        return out

    def _deriv(self, axis: int) -> "Field":  # pragma: no cover
        raise NotImplementedError

    def derivative(self, beta) -> "Field":
        """Mixed partial derivative for the multi-index ``beta``."""
        out = self
        for axis, order in enumerate(beta):
            for _ in range(int(order)):
                out = out.deriv(axis)
        return out

    # -- algebra ------------------------------------------------------------
    def shift(self, v) -> "Field":
        return shift(self, v)

    def conj(self) -> "Field":
        return conj(self)

    def __add__(self, other):
        return add(self, as_field(other))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, scale(-1.0, as_field(other)))

    def __rsub__(self, other):
        return add(as_field(other), scale(-1.0, self))

    def __neg__(self):
        return scale(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, Field):
            return mul(self, other)
        return scale(other, self)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return scale(1.0 / c, self)


# ---------------------------------------------------------------- leaves


class Const(Field):
    __slots__ = ("value",)
    op = "const"

    def __init__(self, value):
        super().__init__()
        self.value = complex(value)

    @property
    def is_zero(self):
        return self.value == 0

    def _eval(self, ev, off):
        return np.full(ev.n, self.value, dtype=complex)

    def _deriv(self, axis):
        return ZERO

    def __repr__(self):
        return f"Const({self.value})"


ZERO = Const(0.0)
ONE = Const(1.0)


class Poly(Field):
    """c0 + <b, xi> + 1/2 <xi, M xi> with complex coefficients and symmetric M."""

    __slots__ = ("c0", "b", "M")
    op = "poly"

    def __init__(self, c0, b, M=None):
        super().__init__()
        b = np.asarray(b, dtype=complex).reshape(-1)
        d = b.size
        M = np.zeros((d, d), dtype=complex) if M is None else np.asarray(M, dtype=complex).reshape(d, d)
        self.c0 = complex(c0)
        self.b = b
        self.M = 0.5 * (M + M.T)

    @property
    def is_zero(self):
        return self.c0 == 0 and not np.any(self.b) and not np.any(self.M)

    @property
    def degree(self) -> int:
        if np.any(self.M != 0):
            return 2
        return 1 if np.any(self.b != 0) else 0

    def _eval(self, ev, off):
        x = ev.points(off)
        out = self.c0 + x @ self.b
        if np.any(self.M != 0):
            out = out + 0.5 * np.einsum("ni,ij,nj->n", x, self.M, x)
        return out

    def _deriv(self, axis):
        b = self.M[axis]
        if self.b[axis] == 0 and not np.any(b != 0):
            return ZERO
        if not np.any(b != 0):
            return Const(self.b[axis])
        return Poly(self.b[axis], b)

    def __repr__(self):
        return f"Poly({self.c0}, {self.b.tolist()}, {self.M.tolist()})"


class Trig(Field):
    """amp * cos(<w, xi> + phase); sine waves use phase = -pi/2."""

    __slots__ = ("amp", "w", "phase")
    op = "trig"

    def __init__(self, amp, w, phase=0.0):
        super().__init__()
        self.amp = complex(amp)
        self.w = np.asarray(w, dtype=float).reshape(-1)
        self.phase = float(phase)

    def _eval(self, ev, off):
        return self.amp * np.cos(ev.points(off) @ self.w + self.phase)

    def _deriv(self, axis):
        wa = self.w[axis]
        if wa == 0 or self.amp == 0:
            return ZERO
        return Trig(self.amp * wa, self.w, self.phase + 0.5 * np.pi)

    def __repr__(self):
        return f"Trig({self.amp}, {self.w.tolist()}, {self.phase})"


class Compose(Field):
    """``fn^(order)(Re arg(xi))`` for fn in {chi, phi}.

    Orders above the analytic ones are differentiated by 4th-order central
    differences with step ``fd_step``.
    """

    __slots__ = ("fn", "order", "arg", "fd_step")
    op = "compose"

    def __init__(self, fn: str, arg: Field, order: int = 0, fd_step: float = 1e-5):
        super().__init__()
        if fn not in cutoff.FUNCTIONS:
            raise ValueError(f"unknown composition function {fn!r}")
        if order > cutoff.MAX_ANALYTIC_ORDER:
            raise ValueError(f"order {order} has no analytic rule; use deriv()")
        self.fn = fn
        self.order = int(order)
        self.arg = arg
        self.fd_step = float(fd_step)

    def children(self):
        return (self.arg,)

    def _eval(self, ev, off):
        t = ev(self.arg, off).real
        return cutoff.FUNCTIONS[self.fn](t, self.order).astype(complex)

    def _deriv(self, axis):
        da = self.arg.deriv(axis)
        if da.is_zero:
            return ZERO
        if self.order < cutoff.MAX_ANALYTIC_ORDER:
            outer = Compose(self.fn, self.arg, self.order + 1, self.fd_step)
            return mul(outer, da)
        return central_difference(self, axis, self.fd_step)

    def __repr__(self):
        return f"Compose({self.fn}, order={self.order}, {self.arg!r})"


# ----------------------------------------------------------- inner nodes


class Sum(Field):
    __slots__ = ("terms",)
    op = "sum"

    def __init__(self, terms):
        super().__init__()
        self.terms = tuple(terms)

    def children(self):
        return self.terms

    def _eval(self, ev, off):
        it = iter(self.terms)
        out = ev(next(it), off).copy()
        for t in it:
            out += ev(t, off)
        return out

    def _deriv(self, axis):
        return add(*(t.deriv(axis) for t in self.terms))

    def __repr__(self):
        return "Sum(" + ", ".join(map(repr, self.terms)) + ")"


class Product(Field):
    __slots__ = ("a", "b")
    op = "product"

    def __init__(self, a, b):
        super().__init__()
        self.a = a
        self.b = b

    def children(self):
        return (self.a, self.b)

    def _eval(self, ev, off):
        return ev(self.a, off) * ev(self.b, off)

    def _deriv(self, axis):
        return add(mul(self.a.deriv(axis), self.b), mul(self.a, self.b.deriv(axis)))

    def __repr__(self):
        return f"Product({self.a!r}, {self.b!r})"


class Scale(Field):
    __slots__ = ("c", "f")
    op = "scale"

    def __init__(self, c, f):
        super().__init__()
        self.c = complex(c)
        self.f = f

    def children(self):
        return (self.f,)

    def _eval(self, ev, off):
        return self.c * ev(self.f, off)

    def _deriv(self, axis):
        return scale(self.c, self.f.deriv(axis))

    def __repr__(self):
        return f"Scale({self.c}, {self.f!r})"


class Conj(Field):
    __slots__ = ("f",)
    op = "conj"

    def __init__(self, f):
        super().__init__()
        self.f = f

    def children(self):
        return (self.f,)

    def _eval(self, ev, off):
        return np.conj(ev(self.f, off))

    def _deriv(self, axis):
        return conj(self.f.deriv(axis))

    def __repr__(self):
        return f"Conj({self.f!r})"


class Shift(Field):
    """f(xi + v)."""

    __slots__ = ("f", "v")
    op = "shift"

    def __init__(self, f, v):
        super().__init__()
        self.f = f
        self.v = _offset_key(v)

    def children(self):
        return (self.f,)

    def _eval(self, ev, off):
        return ev(self.f, tuple(a + b for a, b in zip(off, self.v)))

    def _deriv(self, axis):
        return shift(self.f.deriv(axis), self.v)

    def __repr__(self):
        return f"Shift({self.f!r}, {list(self.v)})"


# ------------------------------------------------------- smart builders


def as_field(x) -> Field:
    if isinstance(x, Field):
        return x
    return Const(x)


def _merge_polys(polys) -> Field:
    c0 = sum(p.c0 for p in polys)
    b = sum(p.b for p in polys)
    M = sum(p.M for p in polys)
    return Poly(c0, b, M)


#: nested sums are only flattened while the result stays this small
FLATTEN_LIMIT = 64


def _collect(terms) -> list:
    """Merge c1*f + c2*f for a shared node f; exact cancellations disappear."""
    weights: dict = {}
    bases: dict = {}
    for t in terms:
        c, f = (t.c, t.f) if isinstance(t, Scale) else (1.0 + 0j, t)
        bases[id(f)] = f
        weights[id(f)] = weights.get(id(f), 0j) + c
    return [scale(weights[i], f) for i, f in bases.items() if weights[i] != 0]


def add(*terms) -> Field:
    """Sum with flattening, zero dropping and merging of constants/polynomials."""
    flat = []
    for t in terms:
        t = as_field(t)
        if t.is_zero:
            continue
        if isinstance(t, Sum) and len(flat) + len(t.terms) <= FLATTEN_LIMIT:
            flat.extend(t.terms)
        elif (isinstance(t, Scale) and isinstance(t.f, Sum)
              and len(flat) + len(t.f.terms) <= FLATTEN_LIMIT):
            flat.extend(scale(t.c, u) for u in t.f.terms)
        else:
            flat.append(t)
    consts = [t for t in flat if isinstance(t, Const)]
    polys = [t for t in flat if isinstance(t, Poly)]
    rest = _collect(t for t in flat if not isinstance(t, (Const, Poly)))
    if polys:
        merged = _merge_polys(polys)
        merged = Poly(merged.c0 + sum(c.value for c in consts), merged.b, merged.M)
        rest.append(merged)
    elif consts:
        c = sum(t.value for t in consts)
        if c != 0:
            rest.append(Const(c))
    rest = [t for t in rest if not t.is_zero]
    if not rest:
        return ZERO
    if len(rest) == 1:
        return rest[0]
    return Sum(rest)


def mul(a, b) -> Field:
    a, b = as_field(a), as_field(b)
    if a.is_zero or b.is_zero:
        return ZERO
    if isinstance(a, Const):
        return scale(a.value, b)
    if isinstance(b, Const):
        return scale(b.value, a)
    return Product(a, b)


def scale(c, f) -> Field:
    c = complex(c)
    f = as_field(f)
    if c == 0 or f.is_zero:
        return ZERO
    if c == 1:
        return f
    if isinstance(f, Const):
        return Const(c * f.value)
    if isinstance(f, Scale):
        return scale(c * f.c, f.f)
    if isinstance(f, Poly):
        return Poly(c * f.c0, c * f.b, c * f.M)
    return Scale(c, f)


def conj(f) -> Field:
    f = as_field(f)
    if isinstance(f, Const):
        return Const(np.conj(f.value))
    if isinstance(f, Conj):
        return f.f
    if isinstance(f, Shift):
        return shift(conj(f.f), f.v)
    if isinstance(f, Scale):
        return scale(np.conj(f.c), conj(f.f))
    if isinstance(f, Poly):
        if f.c0.imag == 0 and not np.any(f.b.imag) and not np.any(f.M.imag):
            return f
        return Poly(np.conj(f.c0), np.conj(f.b), np.conj(f.M))
    if isinstance(f, Trig):
        if f.amp.imag == 0:
            return f
        return Trig(np.conj(f.amp), f.w, f.phase)
    if isinstance(f, Compose):
        return f
    return Conj(f)


def shift(f, v) -> Field:
    f = as_field(f)
    v = _offset_key(v)
    if isinstance(f, Const) or not any(v):
        return f
    if isinstance(f, Shift):
        w = tuple(a + b for a, b in zip(f.v, v))
        return shift(f.f, w)
    return Shift(f, v)


def central_difference(f: Field, axis: int, h: float) -> Field:
    """Fourth-order central difference of ``f`` along ``axis`` as a field."""
    d = _dim_hint(f)
    e = np.zeros(d)
    e[axis] = h
    terms = [
        shift(f, -2 * e),
        scale(-8.0, shift(f, -e)),
        scale(8.0, shift(f, e)),
        scale(-1.0, shift(f, 2 * e)),
    ]
    return scale(1.0 / (12.0 * h), add(*terms))


def _dim_hint(f: Field) -> int:
    stack = [f]
    seen = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Poly):
            return node.b.size
        if isinstance(node, Trig):
            return node.w.size
        if isinstance(node, Shift):
            return len(node.v)
        stack.extend(node.children())
    raise ValueError("cannot infer the dimension of a constant field")


def iter_nodes(roots):
    """Yield every distinct node reachable from ``roots`` (children first)."""
    seen = set()
    order = []
    stack = [(r, False) for r in reversed(list(roots))]
    while stack:
        node, expanded = stack.pop()
        if id(node) in seen:
            continue
        if expanded:
            seen.add(id(node))
            order.append(node)
            continue
        stack.append((node, True))
        for ch in reversed(node.children()):
            if id(ch) not in seen:
                stack.append((ch, False))
    return order


# -------------------------------------------------------- constructors


def constant(c) -> Field:
    return Const(c)


def affine(c0, b) -> Poly:
    return Poly(c0, b)


def quadratic(M, b=None, c0=0.0) -> Poly:
    M = np.asarray(M, dtype=complex)
    b = np.zeros(M.shape[0]) if b is None else b
    return Poly(c0, b, M)


def cos_wave(w, amp=1.0, phase=0.0) -> Trig:
    return Trig(amp, w, phase)


def sin_wave(w, amp=1.0, phase=0.0) -> Trig:
    return Trig(amp, w, phase - 0.5 * np.pi)
