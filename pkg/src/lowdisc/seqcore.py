"""Classical low-discrepancy generators: van der Corput, Halton, Sobol',
Owen-scrambled Sobol', and a counter-based uniform baseline.

Every generator is a pure, stateless map from an integer index to a point,
so prefixes are extensible and calls are trivially thread-safe.  Point sets
travel between modules as plain ``(n, d)`` float64 arrays with coordinates
in ``[0, 1)``.
"""

from __future__ import annotations

import math
import struct
import threading
from dataclasses import dataclass
from functools import lru_cache
from hashlib import blake2b
from pathlib import Path

import numpy as np

SOBOL_BITS = 32

KINDS = ("vdc", "halton", "sobol", "sobol-scrambled", "uniform", "neural")
RANDOMIZED_KINDS = ("sobol-scrambled", "uniform")

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


def split_seed(seed: int, *labels) -> int:
    """Derive a 64-bit sub-seed from a master seed and a label path.

    All randomized behavior in the package is keyed by one master seed;
    independent consumers get sub-seeds via distinct label paths.
    """
    h = blake2b(digest_size=8)
    h.update((int(seed) & _MASK64).to_bytes(8, "little"))
    for label in labels:
        h.update(str(label).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


# ---------------------------------------------------------------------------
# primes

_prime_lock = threading.Lock()
_prime_cache: list[int] = [2, 3, 5, 7, 11, 13]


def primes(n: int) -> list[int]:
    """First ``n`` primes, sieved on demand and cached."""
    global _prime_cache
    if n <= len(_prime_cache):
        return _prime_cache[:n]
    with _prime_lock:
        if n <= len(_prime_cache):
            return _prime_cache[:n]
        m = max(n, 6)
        # p_n < n(ln n + ln ln n) for n >= 6
        bound = int(m * (math.log(m) + math.log(math.log(m)))) + 10
        sieve = np.ones(bound + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, int(bound**0.5) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        _prime_cache = np.flatnonzero(sieve).tolist()
    return _prime_cache[:n]


# ---------------------------------------------------------------------------
# radical inverse / Halton

def radical_inverse(i: int, base: int) -> float:
    """Reflect the base-``b`` digits of ``i`` across the radix point."""
    if base < 2:
        raise ValueError(f"radical inverse needs base >= 2, got {base}")
    if i < 0:
        raise ValueError("index must be nonnegative")
    x = 0.0
    scale = 1.0 / base
    while i > 0:
        i, digit = divmod(i, base)
        x += digit * scale
        scale /= base
    return x


def radical_inverse_many(indices, base: int) -> np.ndarray:
    """Vectorized :func:`radical_inverse` over an index array."""
    if base < 2:
        raise ValueError(f"radical inverse needs base >= 2, got {base}")
    rem = np.asarray(indices, dtype=np.int64).copy()
    if rem.size and rem.min() < 0:
        raise ValueError("indices must be nonnegative")
    out = np.zeros(rem.shape, dtype=np.float64)
    scale = 1.0 / base
    while rem.any():
        rem, digit = np.divmod(rem, base)
        out += digit * scale
        scale /= base
    return out


def halton_point(i: int, dim: int) -> np.ndarray:
    """Coordinate ``j`` is the radical inverse of ``i`` in the j-th prime."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return np.array([radical_inverse(i, b) for b in primes(dim)])


def halton_points(indices, dim: int) -> np.ndarray:
    bases = primes(dim)
    return np.stack([radical_inverse_many(indices, b) for b in bases], axis=1)


# ---------------------------------------------------------------------------
# Sobol'

def gray_code(i):
    """Reflected binary code ``i ^ (i >> 1)``; works on ints and arrays."""
    return i ^ (i >> 1)


# Initial direction data for dimensions 2..16 in new-joe-kuo-6 layout:
# (degree s, inner coefficient bits a_1..a_{s-1} packed MSB-first, m_1..m_s).
# Dimension 1 is the plain van der Corput construction.
_EMBEDDED_ROWS = (
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
    (5, 4, (1, 1, 5, 5, 5)),
    (5, 7, (1, 1, 7, 11, 19)),
    (5, 11, (1, 1, 5, 1, 1)),
    (5, 13, (1, 1, 1, 3, 11)),
    (5, 14, (1, 3, 5, 5, 31)),
    (6, 1, (1, 3, 3, 9, 7, 49)),
    (6, 13, (1, 1, 1, 15, 21, 21)),
    (6, 16, (1, 3, 1, 13, 27, 49)),
)


@dataclass(frozen=True)
class DirectionTable:
    """Primitive-polynomial degrees, coefficient encodings, and initial
    direction integers for Sobol' dimensions 2..max_dim.

    ``coeffs[j]`` packs the inner polynomial bits a_1..a_{s-1} MSB-first
    (leading and trailing coefficients of a primitive polynomial are 1 and
    are not stored).  ``initials[j][k-1]`` is the integer m_k defining the
    direction number v_k = m_k / 2^k; it must be odd and < 2^k.
    """

    degrees: tuple[int, ...]
    coeffs: tuple[int, ...]
    initials: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not (len(self.degrees) == len(self.coeffs) == len(self.initials)):
            raise ValueError("degrees, coeffs, and initials must align")
        for row, (s, a, m) in enumerate(
            zip(self.degrees, self.coeffs, self.initials)
        ):
            dim = row + 2
            if s < 1 or len(m) != s:
                raise ValueError(f"dimension {dim}: expected {s} initial values")
            if not 0 <= a < (1 << max(s - 1, 0)) + 1:
                raise ValueError(f"dimension {dim}: coefficient bits out of range")
            for k, mk in enumerate(m, start=1):
                if mk % 2 == 0 or not 0 < mk < (1 << k):
                    raise ValueError(
                        f"dimension {dim}: m_{k}={mk} must be odd and < 2^{k}"
                    )

    @property
    def max_dim(self) -> int:
        return len(self.degrees) + 1

    @classmethod
    def embedded(cls) -> "DirectionTable":
        """Built-in table covering dimensions up to 16 (no data file needed)."""
        return cls(
            degrees=tuple(r[0] for r in _EMBEDDED_ROWS),
            coeffs=tuple(r[1] for r in _EMBEDDED_ROWS),
            initials=tuple(r[2] for r in _EMBEDDED_ROWS),
        )

    @classmethod
    def from_file(cls, path) -> "DirectionTable":
        """Parse a direction-number file with lines ``d s a m_1 .. m_s``.

        The first line is a header and is skipped.  Dimensions must cover
        2..max contiguously (the standard file layout).
        """
        rows: dict[int, tuple[int, int, tuple[int, ...]]] = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh):
                if lineno == 0:
                    continue
                parts = line.split()
                if not parts:
                    continue
                d, s, a = int(parts[0]), int(parts[1]), int(parts[2])
                m = tuple(int(v) for v in parts[3:])
                if len(m) != s:
                    raise ValueError(f"{path}: dimension {d} lists {len(m)} m-values, expected {s}")
                rows[d] = (s, a, m)
        if not rows:
            raise ValueError(f"{path}: no direction-number rows found")
        dims = sorted(rows)
        if dims[0] != 2 or dims != list(range(2, dims[-1] + 1)):
            raise ValueError(f"{path}: dimensions must cover 2..max contiguously")
        return cls(
            degrees=tuple(rows[d][0] for d in dims),
            coeffs=tuple(rows[d][1] for d in dims),
            initials=tuple(rows[d][2] for d in dims),
        )


@lru_cache(maxsize=8)
def _direction_matrix(table: DirectionTable, dim: int, bits: int) -> np.ndarray:
    """(dim, bits) array of direction integers scaled to ``bits`` word width."""
    V = np.zeros((dim, bits), dtype=np.uint64)
    for k in range(1, bits + 1):
        V[0, k - 1] = 1 << (bits - k)
    for j in range(2, dim + 1):
        s, a, m = (
            table.degrees[j - 2],
            table.coeffs[j - 2],
            table.initials[j - 2],
        )
        row = [0] * (bits + 1)
        for k in range(1, min(s, bits) + 1):
            row[k] = m[k - 1] << (bits - k)
        for k in range(s + 1, bits + 1):
            acc = row[k - s] ^ (row[k - s] >> s)
            for t in range(1, s):
                if (a >> (s - 1 - t)) & 1:
                    acc ^= row[k - t]
            row[k] = acc
        V[j - 1] = row[1:]
    V.setflags(write=False)
    return V


def sobol_raw(indices, dim: int, table: DirectionTable | None = None) -> np.ndarray:
    """Sobol' points as ``(n, dim)`` 32-bit integer fractions (times 2^32).

    Index ``i`` selects direction integers by the bits of its Gray code.
    """
    table = table or DirectionTable.embedded()
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim > table.max_dim:
        raise ValueError(
            f"dimension {dim} exceeds the direction table "
            f"(max supported dimension {table.max_dim})"
        )
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and idx.min() < 0:
        raise ValueError("indices must be nonnegative")
    if idx.size and idx.max() >= (1 << SOBOL_BITS):
        raise ValueError(f"indices must be < 2^{SOBOL_BITS} at word width {SOBOL_BITS}")
    g = gray_code(idx.astype(np.uint64))
    V = _direction_matrix(table, dim, SOBOL_BITS)
    acc = np.zeros((idx.size, dim), dtype=np.uint64)
    for k in range(SOBOL_BITS):
        remaining = g >> _U64(k)
        if not remaining.any():
            break
        sel = (remaining & _U64(1)).astype(bool)
        acc[sel] ^= V[:, k]
    return acc


def sobol_points(indices, dim: int, table: DirectionTable | None = None) -> np.ndarray:
    return sobol_raw(indices, dim, table) * 2.0**-SOBOL_BITS


def sobol_point(i: int, dim: int, table: DirectionTable | None = None) -> np.ndarray:
    return sobol_points([i], dim, table)[0]


# ---------------------------------------------------------------------------
# scrambling and the uniform baseline

def _splitmix64(x):
    """SplitMix64 finalizer; accepts uint64 arrays or scalars.

    Wraparound modulo 2^64 is the point, so overflow warnings are silenced.
    """
    with np.errstate(over="ignore"):
        z = x + _U64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
        return z ^ (z >> _U64(31))


def owen_scramble(raw, seed: int, bits: int = SOBOL_BITS) -> np.ndarray:
    """Nested uniform scrambling of base-2 digital points.

    ``raw`` holds ``(n, d)`` integer fractions with ``bits`` known bits.  The
    flip of bit ``k`` of a coordinate is a hash of (seed, dimension, level,
    the k-1 more-significant bits), so equal prefixes always receive equal
    flips and no permutation tree needs to be stored.
    """
    raw = np.ascontiguousarray(raw, dtype=np.uint64)
    if raw.ndim != 2:
        raise ValueError("raw must be an (n, d) array")
    n, d = raw.shape
    out = np.zeros_like(raw)
    seed_key = _splitmix64(_U64(seed & _MASK64))
    for j in range(d):
        col = raw[:, j]
        dim_key = _splitmix64(seed_key ^ _U64((j + 1) * 0x9E3779B97F4A7C15 & _MASK64))
        scrambled = np.zeros(n, dtype=np.uint64)
        for k in range(1, bits + 1):
            level_key = _splitmix64(dim_key ^ _U64(k))
            prefix = col >> _U64(bits - k + 1)
            flip = _splitmix64(level_key ^ prefix) & _U64(1)
            bit = (col >> _U64(bits - k)) & _U64(1)
            scrambled |= (bit ^ flip) << _U64(bits - k)
        out[:, j] = scrambled
    return out * 2.0**-bits


def _uniform_points(indices, dim: int, seed: int) -> np.ndarray:
    """Counter-based uniform variates: a pure hash of (seed, index, coord)."""
    idx = np.asarray(indices, dtype=np.uint64)
    out = np.empty((idx.size, dim), dtype=np.float64)
    seed_key = _splitmix64(_U64(seed & _MASK64))
    for j in range(dim):
        dim_key = _splitmix64(seed_key ^ _U64((j + 1) * 0xD1B54A32D192ED03 & _MASK64))
        h = _splitmix64(dim_key ^ (idx * _U64(0x9E3779B97F4A7C15)))
        out[:, j] = (h >> _U64(11)) * 2.0**-53
    return out


# ---------------------------------------------------------------------------
# sequence descriptions and the one-stop generator

@dataclass(frozen=True)
class SequenceSpec:
    """What to generate: a kind, a dimension, a burn-in, and (when the kind
    is randomized) a seed, or (when neural) a model path."""

    kind: str
    dim: int
    burn_in: int = 0
    seed: int | None = None
    model_path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sequence kind {self.kind!r}; expected one of {KINDS}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.kind == "vdc" and self.dim != 1:
            raise ValueError("van der Corput is one-dimensional")
        if self.kind in RANDOMIZED_KINDS:
            if self.seed is None:
                raise ValueError(f"kind {self.kind!r} requires a seed")
        elif self.seed is not None:
            raise ValueError(f"kind {self.kind!r} is deterministic; seed must be None")
        if self.kind == "neural":
            if not self.model_path:
                raise ValueError("kind 'neural' requires model_path")
        elif self.model_path is not None:
            raise ValueError("model_path only applies to kind 'neural'")


def generate(spec: SequenceSpec, n: int) -> np.ndarray:
    """Points for raw indices ``burn_in .. burn_in + n - 1`` as an (n, d) array.

    Raw index 0 is the origin point of the classical constructions; the
    neural sequence is 1-indexed, so its raw indices are shifted by one.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.arange(spec.burn_in, spec.burn_in + n, dtype=np.int64)
    if spec.kind == "vdc":
        return radical_inverse_many(idx, 2).reshape(-1, 1)
    if spec.kind == "halton":
        return halton_points(idx, spec.dim)
    if spec.kind == "sobol":
        return sobol_points(idx, spec.dim)
    if spec.kind == "sobol-scrambled":
        return owen_scramble(sobol_raw(idx, spec.dim), spec.seed)
    if spec.kind == "uniform":
        return _uniform_points(idx, spec.dim, spec.seed)
    # neural: the model consumes 1-based sequence-local indices
    from . import neuralnet

    model = neuralnet.load_model(spec.model_path)
    if model.out_dim != spec.dim:
        raise ValueError(
            f"model at {spec.model_path} generates dimension {model.out_dim}, "
            f"spec asks for {spec.dim}"
        )
    return neuralnet.forward(model, idx + 1)


# ---------------------------------------------------------------------------
# point file formats

POINT_MAGIC = b"LDP1"
_POINT_HEADER = struct.Struct("<4sIII")  # magic, version, n, d


def save_points_csv(points: np.ndarray, path) -> None:
    """One point per row, 17-significant-digit decimals (lossless for f64)."""
    np.savetxt(path, np.atleast_2d(points), fmt="%.17g", delimiter=",")


def load_points_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def save_points_bin(points: np.ndarray, path) -> None:
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype="<f8")
    n, d = pts.shape
    with open(path, "wb") as fh:
        fh.write(_POINT_HEADER.pack(POINT_MAGIC, 1, n, d))
        fh.write(pts.tobytes())


def load_points_bin(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, version, n, d = _POINT_HEADER.unpack_from(data)
    if magic != POINT_MAGIC:
        raise ValueError(f"{path}: not a point file (bad magic)")
    if version != 1:
        raise ValueError(f"{path}: unsupported point-file version {version}")
    body = np.frombuffer(data, dtype="<f8", offset=_POINT_HEADER.size)
    if body.size != n * d:
        raise ValueError(f"{path}: truncated point file")
    return body.reshape(n, d).copy()


def load_points(path) -> np.ndarray:
    """Load either format, sniffing the binary magic."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == POINT_MAGIC:
        return load_points_bin(path)
    return load_points_csv(path)
