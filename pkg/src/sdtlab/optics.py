"""Jones-calculus model of the time-bin/polarization analyzer.

Each measurement vector is built by the chain

    BPol . BHWP1 . BQWP1 . BHFO . Interf_port . QWP_j . HWP_j . e_k

and the detector operator is its outer product with itself. Port P1
(detectors B1, B2) couples |Ht1> and |Vt2>; port P2 (B3, B4) couples
|Vt1> and |Ht2>.

Polarization conventions: D = (H+V)/sqrt2, A = (H-V)/sqrt2,
R = (H-iV)/sqrt2, L = (H+iV)/sqrt2.
"""
from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigurationError, ParseError, ValidationError
from .qcore import StateVector

SETTINGS_FORMAT_VERSION = 1
SETTINGS_HEADER = (
    "index", "alpha1_deg", "alpha2_deg", "alpha3_deg",
    "beta1_deg", "beta2_deg", "beta3_deg", "t_h", "t_v", "duration_scale",
)

INTERF_P1 = np.array([[1, 0], [0, 0], [0, 0], [0, 1]], dtype=complex)
INTERF_P2 = np.array([[0, 0], [1, 0], [0, 1], [0, 0]], dtype=complex)
BHFO = np.diag([1, -1, 1, -1]).astype(complex)

_E_H = np.array([1, 0], dtype=complex)
_E_V = np.array([0, 1], dtype=complex)


@dataclass(frozen=True)
class TomographySetting:
    """Waveplate angles (radians) and removable-polarizer transmissions."""

    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    beta3: float = 0.0
    t_h: float = 1.0
    t_v: float = 1.0
    duration_scale: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.t_h <= 1.0 and 0.0 <= self.t_v <= 1.0):
            raise ValidationError("polarizer transmissions must lie in [0, 1]")
        if self.duration_scale <= 0:
            raise ValidationError("duration_scale must be positive")

    @property
    def uses_polarizer(self) -> bool:
        return not (self.t_h == 1.0 and self.t_v == 1.0)

    def angles_deg(self) -> tuple[float, ...]:
        return tuple(
            float(np.degrees(a))
            for a in (self.alpha1, self.alpha2, self.alpha3, self.beta1, self.beta2, self.beta3)
        )


@dataclass(frozen=True)
class ProjectorSet:
    """Measurement operators for Bob's detectors B1..B4 (4x4 each)."""

    operators: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    vectors: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

    def stacked(self) -> np.ndarray:
        return np.stack(self.operators)


@dataclass(frozen=True)
class TargetState36:
    index: int
    label: str
    state: StateVector


def jones_hwp(alpha: float) -> np.ndarray:
    c2, s2 = np.cos(2 * alpha), np.sin(2 * alpha)
    # -2 cos(a) sin(a) == -sin(2a)
    return np.array([[c2, -s2], [-s2, -c2]], dtype=complex)


def jones_qwp(beta: float) -> np.ndarray:
    c, s = np.cos(beta), np.sin(beta)
    return np.array(
        [[c * c + 1j * s * s, (1j - 1) * c * s], [(1j - 1) * c * s, 1j * c * c + s * s]],
        dtype=complex,
    )


def polarizer_matrix(t_h: float, t_v: float) -> np.ndarray:
    h = (2 * t_h - t_v) * t_h
    v = (2 * t_v - t_h) * t_v
    return np.diag([h, v, h, v]).astype(complex)


def _block(m2: np.ndarray) -> np.ndarray:
    return np.kron(np.eye(2), m2)


def measurement_vectors(setting: TomographySetting) -> tuple[np.ndarray, ...]:
    """Column vectors for B1..B4 (unnormalized; norm encodes polarizer loss)."""
    front = (
        polarizer_matrix(setting.t_h, setting.t_v)
        @ _block(jones_hwp(setting.alpha1))
        @ _block(jones_qwp(setting.beta1))
        @ BHFO
    )
    p1 = front @ INTERF_P1 @ jones_qwp(setting.beta2) @ jones_hwp(setting.alpha2)
    p2 = front @ INTERF_P2 @ jones_qwp(setting.beta3) @ jones_hwp(setting.alpha3)
    return (p1 @ _E_H, p1 @ _E_V, p2 @ _E_H, p2 @ _E_V)


def build_projector_set(setting: TomographySetting) -> ProjectorSet:
    vecs = measurement_vectors(setting)
    ops = tuple(np.outer(v, v.conj()) for v in vecs)
    return ProjectorSet(ops, vecs)


# --- the 36 target states -------------------------------------------------

_POL = {
    "H": np.array([1, 0], dtype=complex),
    "V": np.array([0, 1], dtype=complex),
    "D": np.array([1, 1], dtype=complex) / np.sqrt(2),
    "A": np.array([1, -1], dtype=complex) / np.sqrt(2),
    "R": np.array([1, -1j], dtype=complex) / np.sqrt(2),
    "L": np.array([1, 1j], dtype=complex) / np.sqrt(2),
}


def pol_time_ket(pol: str, time_bin: int) -> np.ndarray:
    """|pol t_k> in the 4-dim basis (time_bin is 1 or 2)."""
    out = np.zeros(4, dtype=complex)
    out[2 * (time_bin - 1): 2 * time_bin] = _POL[pol]
    return out


def _superposition(a: np.ndarray, b: np.ndarray, coef: complex) -> np.ndarray:
    return (a + coef * b) / np.sqrt(2)


@lru_cache(maxsize=None)
def standard_36_targets() -> tuple[TargetState36, ...]:
    """The informationally overcomplete set of 36 single-photon projections."""
    entries: list[tuple[str, np.ndarray]] = []
    for pol in "HVDARL":
        for tb in (1, 2):
            entries.append((f"{pol}t{tb}", pol_time_ket(pol, tb)))
    for pol in "HV":
        for sign, coef in (("+i", 1j), ("-i", -1j), ("+", 1.0), ("-", -1.0)):
            ket = _superposition(pol_time_ket(pol, 1), pol_time_ket(pol, 2), coef)
            entries.append((f"{pol}(t1{sign}t2)", ket))
    for first, second in (("D", "A"), ("A", "D"), ("R", "L"), ("L", "R")):
        for sign, coef in (("+i", 1j), ("-i", -1j), ("+", 1.0), ("-", -1.0)):
            ket = _superposition(pol_time_ket(first, 1), pol_time_ket(second, 2), coef)
            entries.append((f"{first}t1{sign}{second}t2", ket))
    # group order matches the listing: the D/A pairs come before the R/L pairs
    return tuple(
        TargetState36(i + 1, label, StateVector(ket)) for i, (label, ket) in enumerate(entries)
    )


# --- deriving the settings table ------------------------------------------

HWP_CANDIDATES_DEG = (0.0, 22.5, -22.5, 45.0)
QWP_CANDIDATES_DEG = (0.0, 45.0, -45.0, 90.0)


def support_overlap(vector: np.ndarray, target: np.ndarray) -> float:
    """|<target|v>|^2 / |v|^2: fidelity of the operator's support with the target."""
    n = np.vdot(vector, vector).real
    if n <= 1e-15:
        return 0.0
    return float(abs(np.vdot(target, vector)) ** 2 / n)


def _needs_polarizer(target: np.ndarray) -> str | None:
    """Same polarization in both time bins needs the removable polarizer."""
    h = np.abs(target[[0, 2]]).sum()
    v = np.abs(target[[1, 3]]).sum()
    if v < 1e-12:
        return "H"
    if h < 1e-12:
        return "V"
    return None


def _setting_from_deg(a1, a2, b1, b2, pol):
    t_h, t_v = {None: (1.0, 1.0), "H": (1.0, 0.0), "V": (0.0, 1.0)}[pol]
    scale = 1.0 if pol is None else 2.0
    a1, a2, b1, b2 = np.radians([a1, a2, b1, b2])
    return TomographySetting(a1, a2, a2, b1, b2, b2, t_h, t_v, scale)


def derive_setting(target: np.ndarray, tol: float = 1e-9) -> TomographySetting:
    """Find waveplate angles so that detector B1 projects onto ``target``.

    Searches the discrete angle grid first (fewest nonzero angles win), then
    falls back to a numerical solve over continuous angles.
    """
    both = _spans_both_time_bins(target)
    pol = _needs_polarizer(target) if both else None
    best = None
    for a1, b1, a2, b2 in itertools.product(
        HWP_CANDIDATES_DEG, QWP_CANDIDATES_DEG, HWP_CANDIDATES_DEG, QWP_CANDIDATES_DEG
    ):
        s = _setting_from_deg(a1, a2, b1, b2, pol)
        ov = support_overlap(measurement_vectors(s)[0], target)
        if ov > 1 - tol:
            # time-bin superpositions are analyzed with the HWPs at 22.5 deg
            # (single-bin projections at 0 or 45); prefer that layout
            layout = abs(a2) != 22.5 if both else abs(a2) == 22.5
            cost = 10 * layout + sum(x != 0 for x in (a1, b1, a2, b2))
            if best is None or cost < best[0]:
                best = (cost, s)
    if best is not None:
        return best[1]
    return _numeric_setting(target, pol, tol)


def _spans_both_time_bins(target: np.ndarray) -> bool:
    t1 = np.linalg.norm(target[:2]) > 1e-12
    t2 = np.linalg.norm(target[2:]) > 1e-12
    return t1 and t2


def _numeric_setting(target, pol, tol):
    def cost(x):
        s = _setting_from_deg(*np.degrees(x), pol)
        return 1.0 - support_overlap(measurement_vectors(s)[0], target)

    rng = np.random.default_rng(0)
    for _ in range(50):
        res = minimize(cost, rng.uniform(0, np.pi, 4), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
        if res.fun < tol:
            return _setting_from_deg(*np.degrees(res.x), pol)
    raise ConfigurationError("no waveplate setting reproduces the target state")


def derive_settings_36() -> list[TomographySetting]:
    return [derive_setting(t.state.amplitudes) for t in standard_36_targets()]


# --- persisted catalog ----------------------------------------------------

def format_settings_table(settings) -> str:
    buf = io.StringIO()
    buf.write(f"# sdtlab-settings v{SETTINGS_FORMAT_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SETTINGS_HEADER)
    for i, s in enumerate(settings, start=1):
        row = [i, *(f"{a:.6f}" for a in s.angles_deg()), f"{s.t_h:g}", f"{s.t_v:g}", f"{s.duration_scale:g}"]
        w.writerow(row)
    return buf.getvalue()


def parse_settings_table(text: str) -> list[TomographySetting]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# sdtlab-settings v"):
        raise ParseError("missing settings version line", line=1)
    version = lines[0].split("v")[-1].strip()
    if version != str(SETTINGS_FORMAT_VERSION):
        raise ParseError(f"unsupported settings format version {version}", line=1)
    reader = csv.reader(lines[1:])
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != SETTINGS_HEADER:
        raise ParseError("settings header does not match", line=2)
    out = []
    for lineno, row in enumerate(reader, start=3):
        if not row:
            continue
        if len(row) != len(SETTINGS_HEADER):
            raise ParseError(f"expected {len(SETTINGS_HEADER)} fields, got {len(row)}", line=lineno)
        try:
            idx = int(row[0])
            vals = [float(x) for x in row[1:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if idx != len(out) + 1:
            raise ParseError(f"setting index {idx} out of order", line=lineno)
        a1, a2, a3, b1, b2, b3 = np.radians(vals[:6])
        out.append(TomographySetting(a1, a2, a3, b1, b2, b3, *vals[6:]))
    return out


def load_settings_file(path) -> list[TomographySetting]:
    return parse_settings_table(Path(path).read_text())


@lru_cache(maxsize=None)
def _frozen_settings() -> tuple[TomographySetting, ...]:
    text = resources.files("sdtlab.data").joinpath("settings36_v1.csv").read_text()
    settings = parse_settings_table(text)
    verify_catalog(settings)
    return tuple(settings)


def settings_for_36() -> list[TomographySetting]:
    """The 36-setting catalog, read from the frozen, versioned data file.

    The catalog is verified on first load: B1's support must reproduce its
    target state for every setting.
    """
    return list(_frozen_settings())


def verify_catalog(settings, tol: float = 1e-9) -> None:
    targets = standard_36_targets()
    if len(settings) != len(targets):
        raise ConfigurationError(f"catalog has {len(settings)} settings, expected 36")
    for s, t in zip(settings, targets):
        if support_overlap(measurement_vectors(s)[0], t.state.amplitudes) < 1 - tol:
            raise ConfigurationError(f"setting {t.index} does not project onto {t.label}")


@lru_cache(maxsize=None)
def catalog_operators_36() -> np.ndarray:
    """Array of shape (36, 4, 4, 4): setting, Bob detector, 4x4 operator."""
    ops = np.stack([build_projector_set(s).stacked() for s in settings_for_36()])
    ops.setflags(write=False)
    return ops


def detector_mapping_36(tol: float = 1e-9) -> dict[tuple[int, int], int]:
    """Map (setting, detector) -> index of the target state it projects onto.

    Only (setting, detector) cells whose support is one of the 36 targets
    appear. Settings and detectors are 1-based.
    """
    targets = standard_36_targets()
    out = {}
    for si, s in enumerate(settings_for_36(), start=1):
        for dj, v in enumerate(measurement_vectors(s), start=1):
            for t in targets:
                if support_overlap(v, t.state.amplitudes) > 1 - tol:
                    out[(si, dj)] = t.index
                    break
    return out


@dataclass(frozen=True)
class JointSetting:
    index: int
    alice: TomographySetting
    bob: TomographySetting
    alice_index: int
    bob_index: int


def joint_settings_1296() -> list[JointSetting]:
    """Cartesian product of the 36-setting catalog for Alice/Charles and Bob."""
    single = settings_for_36()
    out = []
    for k, (i, j) in enumerate(itertools.product(range(36), range(36)), start=1):
        out.append(JointSetting(k, single[i], single[j], i + 1, j + 1))
    return out


def joint_operators(joint: JointSetting) -> np.ndarray:
    """Shape (4, 4, 16, 16): Alice detector, Bob detector, operator."""
    a = build_projector_set(joint.alice).stacked()
    b = build_projector_set(joint.bob).stacked()
    return np.einsum("aij,bkl->abikjl", a, b).reshape(4, 4, 16, 16)


@lru_cache(maxsize=None)
def catalog_operators_1296() -> np.ndarray:
    """Shape (1296, 4, 4, 16, 16), ordered like :func:`joint_settings_1296`."""
    single = catalog_operators_36()
    ops = np.einsum("saij,tbkl->stabikjl", single, single).reshape(1296, 4, 4, 16, 16)
    ops.setflags(write=False)
    return ops
