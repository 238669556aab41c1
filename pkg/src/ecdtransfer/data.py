"""Survey schema, CSV ingestion, harmonization, imputation, scaling and splits."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .runtime import atomic_write_text

log = logging.getLogger(__name__)

FEATURES: tuple[str, ...] = (
    "child_age",
    "gender",
    "wealth_score",
    "mother_edu_level",
    "urban",
    "stunting_z",
    "underweight_z",
    "diarrhea",
    "fever",
    "books",
    "stimulation_outing",
)
OUTCOME = "ecdi_on_track"
ECDI_DOMAINS: tuple[str, ...] = (
    "ecdi_literacy_numeracy",
    "ecdi_physical",
    "ecdi_learning",
    "ecdi_socio_emotional",
)
GROUP_COLUMNS: tuple[str, ...] = ("country_code", "region", "wealth_quintile")

BINARY_FEATURES = frozenset({"gender", "urban", "diarrhea", "fever", "stimulation_outing"})

MAX_MISSING_FRACTION = 0.5
PREVALENCE_BOUNDS = (0.05, 0.95)
MIN_COUNTRY_ROWS = 100


class SchemaError(ValueError):
    pass


class DataError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Dataset


@dataclass
class Dataset:
    """Feature matrix plus outcome and grouping labels, one row per child."""

    X: np.ndarray
    y: np.ndarray
    country: np.ndarray
    region: np.ndarray
    wealth_quintile: np.ndarray
    row_id: np.ndarray
    feature_names: tuple[str, ...] = FEATURES

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.country = np.asarray(self.country, dtype=object)
        self.region = np.asarray(self.region, dtype=object)
        self.wealth_quintile = np.asarray(self.wealth_quintile, dtype=np.int64)
        self.row_id = np.asarray(self.row_id, dtype=np.int64)
        n = self.X.shape[0]
        if self.X.ndim != 2 or self.X.shape[1] != len(self.feature_names):
            raise SchemaError(f"X has shape {self.X.shape}, expected (n, {len(self.feature_names)})")
        for name in ("y", "country", "region", "wealth_quintile", "row_id"):
            if getattr(self, name).shape != (n,):
                raise SchemaError(f"{name} length {getattr(self, name).shape} != {n} rows")

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def subset(self, idx: np.ndarray | Sequence[int]) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.X[idx],
            self.y[idx],
            self.country[idx],
            self.region[idx],
            self.wealth_quintile[idx],
            self.row_id[idx],
            self.feature_names,
        )

    def countries(self) -> list[str]:
        return sorted(set(self.country.tolist()))

    def regions(self) -> list[str]:
        return sorted(set(self.region.tolist()))

    def where_country(self, codes: Iterable[str]) -> "Dataset":
        return self.subset(np.flatnonzero(np.isin(self.country, list(codes))))

    def countries_in_region(self, region: str) -> list[str]:
        return sorted(set(self.country[self.region == region].tolist()))

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        names = parts[0].feature_names
        return Dataset(
            np.vstack([p.X for p in parts]),
            np.concatenate([p.y for p in parts]),
            np.concatenate([p.country for p in parts]),
            np.concatenate([p.region for p in parts]),
            np.concatenate([p.wealth_quintile for p in parts]),
            np.concatenate([p.row_id for p in parts]),
            names,
        )


def ecdi_on_track(domains: np.ndarray) -> np.ndarray:
    """On track when at least 3 of the 4 ECDI domains are met.

    ``domains`` is (n, 4) with 1/0/NaN. The result is NaN where the missing
    domains could still decide the outcome.
    """
    domains = np.asarray(domains, dtype=np.float64)
    if domains.ndim != 2 or domains.shape[1] != 4:
        raise SchemaError(f"expected (n, 4) domain indicators, got {domains.shape}")
    met = (domains == 1.0).sum(axis=1)
    unknown = np.isnan(domains).sum(axis=1)
    result = (met >= 3).astype(np.float64)
    result[(met < 3) & (met + unknown >= 3)] = np.nan
    return result


def wealth_quintiles(wealth: np.ndarray, country: np.ndarray) -> np.ndarray:
    """Per-country quintile (1..5) of the wealth score by rank; bins differ by at most one row."""
    wealth = np.asarray(wealth, dtype=np.float64)
    country = np.asarray(country, dtype=object)
    out = np.zeros(wealth.shape[0], dtype=np.int64)
    for c in sorted(set(country.tolist())):
        idx = np.flatnonzero(country == c)
        order = idx[np.argsort(wealth[idx], kind="stable")]
        ranks = np.arange(order.size)
        out[order] = ranks * 5 // order.size + 1
    return out


# ---------------------------------------------------------------------------
# CSV input


@dataclass
class RawTable:
    """Columns as read from disk; missing cells are ``None`` (strings) or NaN (numbers)."""

    columns: dict[str, list]
    warnings: list[str] = field(default_factory=list)
    flagged_rows: set[int] = field(default_factory=set)
    harmonized: bool = False

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0


REQUIRED_COLUMNS: tuple[str, ...] = FEATURES + (OUTCOME, "country_code", "region")


def load_csv(path: str | Path, require_outcome: bool = True) -> RawTable:
    """Read a UTF-8 survey extract with a header row.

    Unknown columns are dropped with a warning; empty cells become missing.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    return parse_csv(text, require_outcome=require_outcome)


def parse_csv(text: str, require_outcome: bool = True) -> RawTable:
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise SchemaError("empty file: header row required") from None
    derive_outcome = OUTCOME not in header and all(d in header for d in ECDI_DOMAINS)
    required = [c for c in REQUIRED_COLUMNS if (require_outcome and not derive_outcome) or c != OUTCOME]
    for col in required:
        if col not in header:
            raise SchemaError(f"missing required column: {col}")
    known = set(REQUIRED_COLUMNS) | {"wealth_quintile", "row_id"} | set(ECDI_DOMAINS)
    warnings = []
    extra = [h for h in header if h not in known]
    if extra:
        msg = f"ignoring unknown columns: {', '.join(extra)}"
        log.warning(msg)
        warnings.append(msg)
    keep = [(i, h) for i, h in enumerate(header) if h in known]
    cols: dict[str, list] = {h: [] for _, h in keep}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise SchemaError(f"line {lineno}: {len(row)} cells, header has {len(header)}")
        for i, h in keep:
            cell = row[i].strip()
            cols[h].append(cell if cell != "" else None)
    if derive_outcome:
        dom = np.array(
            [[_domain_value(v) for v in cols[d]] for d in ECDI_DOMAINS], dtype=np.float64
        ).T.reshape(-1, 4)
        cols[OUTCOME] = [None if np.isnan(v) else str(int(v)) for v in ecdi_on_track(dom)]
    for d in ECDI_DOMAINS:
        cols.pop(d, None)
    return RawTable(cols, warnings)


# ---------------------------------------------------------------------------
# Harmonization

_YES = {"yes", "y", "true", "1", "1.0"}
_NO_DK = {"no", "n", "false", "0", "0.0", "dk", "don't know", "dont know", "do not know"}
_GENDER = {"male": 0.0, "m": 0.0, "boy": 0.0, "female": 1.0, "f": 1.0, "girl": 1.0}
_URBAN = {"urban": 1.0, "rural": 0.0}
_EDUCATION = {
    "none": 0.0,
    "no education": 0.0,
    "pre-primary or none": 0.0,
    "primary": 1.0,
    "secondary": 2.0,
    "lower secondary": 2.0,
    "upper secondary": 2.0,
    "higher": 3.0,
    "tertiary": 3.0,
}


def _to_number(value) -> float | None:
    if value is None:
        return float("nan")
    if isinstance(value, (int, float, np.integer, np.floating)):
        return float(value)
    try:
        return float(value)
    except ValueError:
        return None


def _harmonize_cell(col: str, value) -> float | None:
    """Map one cell to a float; NaN means missing, None means unmappable."""
    if value is None:
        return float("nan")
    if isinstance(value, float) and math.isnan(value):
        return value
    token = str(value).strip().lower() if isinstance(value, str) else None
    if col in BINARY_FEATURES or col == OUTCOME:
        if token is not None:
            if token in _YES:
                return 1.0
            if token in _NO_DK:
                return 0.0
            if col == "gender" and token in _GENDER:
                return _GENDER[token]
            if col == "urban" and token in _URBAN:
                return _URBAN[token]
        num = _to_number(value)
        if num is not None and num in (0.0, 1.0):
            return num
        return None
    if col == "mother_edu_level":
        if token is not None and token in _EDUCATION:
            return _EDUCATION[token]
        num = _to_number(value)
        if num is not None and num >= 0 and float(num).is_integer():
            return num
        return None
    if col == "books" and token is not None and token in _NO_DK:
        return 0.0
    num = _to_number(value)
    if num is None or not math.isfinite(num):
        return None
    return num


def _domain_value(v) -> float:
    h = _harmonize_cell(OUTCOME, v)
    return float("nan") if h is None else h


def harmonize(raw: RawTable) -> RawTable:
    """Recode survey tokens into numbers: yes -> 1, no/DK -> 0, gender/urban -> {0, 1}.

    Unmappable cells become missing and their rows are flagged. Applying the
    function to its own output changes nothing.
    """
    cols: dict[str, list] = {}
    flagged = set(raw.flagged_rows)
    warnings = list(raw.warnings)
    for name, values in raw.columns.items():
        if name in FEATURES or name == OUTCOME:
            out = []
            for i, v in enumerate(values):
                h = _harmonize_cell(name, v)
                if h is None:
                    flagged.add(i)
                    warnings.append(f"row {i}: unmappable {name} value {v!r} set missing")
                    h = float("nan")
                out.append(h)
            cols[name] = out
        else:
            cols[name] = list(values)
    return RawTable(cols, warnings, flagged, harmonized=True)


# ---------------------------------------------------------------------------
# Imputation


def _feature_matrix(table: RawTable) -> np.ndarray:
    if not table.harmonized:
        table = harmonize(table)
    return np.column_stack([np.asarray(table.columns[f], dtype=np.float64) for f in FEATURES])


def _check_missingness(X: np.ndarray) -> None:
    frac = np.isnan(X).mean(axis=0) if X.shape[0] else np.zeros(X.shape[1])
    for j, f in enumerate(FEATURES):
        if X.shape[0] and frac[j] == 1.0:
            raise DataError(f"feature {f} is entirely missing")
        if frac[j] >= MAX_MISSING_FRACTION:
            raise DataError(f"feature {f} is {frac[j]:.0%} missing (limit {MAX_MISSING_FRACTION:.0%})")


def _column_medians(X: np.ndarray) -> np.ndarray:
    med = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        col = X[:, j]
        obs = col[~np.isnan(col)]
        if obs.size == 0:
            raise DataError(f"feature {FEATURES[j]} is entirely missing")
        med[j] = np.median(obs)
    return med


def _table_to_dataset(table: RawTable, X: np.ndarray) -> Dataset:
    y = np.asarray(table.columns[OUTCOME], dtype=np.float64)
    keep = ~np.isnan(y)
    if not keep.all():
        dropped = int((~keep).sum())
        msg = f"dropped {dropped} rows with missing {OUTCOME}"
        log.warning(msg)
        table.warnings.append(msg)
    country = np.array([c if c is not None else "" for c in table.columns["country_code"]], dtype=object)
    region = np.array([r if r is not None else "" for r in table.columns["region"]], dtype=object)
    if np.any(country == "") or np.any(region == ""):
        raise DataError("country_code and region must be non-empty on every row")
    if "row_id" in table.columns and all(v is not None for v in table.columns["row_id"]):
        row_id = np.asarray([int(float(v)) for v in table.columns["row_id"]], dtype=np.int64)
        if np.unique(row_id).size != row_id.size:
            raise DataError("row_id values are not unique")
    else:
        row_id = np.arange(len(y), dtype=np.int64)
    X, y, country, region, row_id = X[keep], y[keep].astype(np.int64), country[keep], region[keep], row_id[keep]
    q = wealth_quintiles(X[:, FEATURES.index("wealth_score")], country)
    return Dataset(X, y, country, region, q, row_id)


def impute_median(table: RawTable) -> Dataset:
    """Fill each missing feature cell with the median of that feature's observed cells."""
    X = _feature_matrix(table)
    _check_missingness(X)
    med = _column_medians(X)
    filled = np.where(np.isnan(X), med[None, :], X)
    if not table.harmonized:
        table = harmonize(table)
    return _table_to_dataset(table, filled)


def _ridge_fit(A: np.ndarray, b: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
    mu = A.mean(axis=0)
    sd = A.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (A - mu) / sd
    bm = b.mean()
    coef = np.linalg.solve(Z.T @ Z + alpha * np.eye(Z.shape[1]), Z.T @ (b - bm))
    w = coef / sd
    return w, float(bm - mu @ w)


def impute_chained(
    table: RawTable,
    iterations: int = 10,
    protocol: str = "blind",
    alpha: float = 1.0,
) -> Dataset:
    """Round-robin ridge imputation seeded with medians.

    ``protocol='blind'`` keeps the outcome out of every imputation model;
    ``'congenial'`` adds it as a predictor (rows with missing outcome then use
    the outcome median).
    """
    if protocol not in ("blind", "congenial"):
        raise ValueError(f"protocol must be 'blind' or 'congenial', got {protocol!r}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not table.harmonized:
        table = harmonize(table)
    X = _feature_matrix(table)
    _check_missingness(X)
    missing = np.isnan(X)
    filled = np.where(missing, _column_medians(X)[None, :], X)
    if not missing.any():
        return _table_to_dataset(table, filled)

    extra = None
    if protocol == "congenial":
        y = np.asarray(table.columns[OUTCOME], dtype=np.float64)
        extra = np.where(np.isnan(y), np.nanmedian(y), y)[:, None]

    d = X.shape[1]
    targets = [j for j in range(d) if missing[:, j].any()]
    degenerate: set[int] = set()
    for _ in range(iterations):
        for j in targets:
            if j in degenerate:
                continue
            others = [k for k in range(d) if k != j]
            A = filled[:, others]
            if extra is not None:
                A = np.hstack([A, extra])
            obs = ~missing[:, j]
            if np.all(A[obs].std(axis=0) == 0):
                msg = f"{FEATURES[j]}: predictors have zero variance, keeping median fill"
                log.warning(msg)
                table.warnings.append(msg)
                degenerate.add(j)
                continue
            w, b = _ridge_fit(A[obs], filled[obs, j], alpha)
            filled[missing[:, j], j] = A[missing[:, j]] @ w + b
    return _table_to_dataset(table, filled)


# ---------------------------------------------------------------------------
# Standardization


@dataclass
class Standardizer:
    """Per-feature affine scaling to zero mean and unit (population) variance."""

    mean: np.ndarray
    std: np.ndarray
    feature_names: tuple[str, ...] = FEATURES

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != self.std.shape or self.mean.shape != (len(self.feature_names),):
            raise SchemaError("standardizer mean/std/feature_names lengths disagree")
        bad = [f for f, s in zip(self.feature_names, self.std) if not (s > 0 and np.isfinite(s))]
        if bad:
            raise DataError(f"standardizer has non-positive std for: {', '.join(bad)}")

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.mean.shape[0]:
            raise SchemaError(f"expected {self.mean.shape[0]} features, got {X.shape[-1]}")
        return (X - self.mean) / self.std

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(), "feature_names": list(self.feature_names)}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["mean"]), np.asarray(d["std"]), tuple(d["feature_names"]))


def fit_standardizer(
    X: np.ndarray,
    feature_names: Sequence[str] = FEATURES,
    min_std: float = 1e-12,
    allow_constant: bool = False,
) -> Standardizer:
    """Fit mean/population-std scaling.

    A feature with std below ``min_std`` is an error, unless ``allow_constant``
    is set, in which case it is centred and left unscaled (std = 1). The
    lenient mode exists for tiny local samples where a binary column may be
    constant.
    """
    X = np.asarray(X, dtype=np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    low = std <= min_std
    if low.any():
        if not allow_constant:
            names = [f for f, bad in zip(feature_names, low) if bad]
            raise DataError(f"zero-variance feature(s): {', '.join(names)}")
        std = np.where(low, 1.0, std)
    return Standardizer(mean, std, tuple(feature_names))


# ---------------------------------------------------------------------------
# Splits


def _stratified_take(groups: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Per-group round(fraction * size) rows, groups visited in sorted order."""
    picked = []
    for g in sorted(set(groups.tolist())):
        idx = np.flatnonzero(groups == g)
        k = int(round(fraction * idx.size))
        if k:
            picked.append(rng.choice(idx, size=k, replace=False))
    return np.sort(np.concatenate(picked)) if picked else np.array([], dtype=np.int64)


def stratified_holdout(
    data: Dataset, fraction: float, seed: int, by: str = "country"
) -> tuple[Dataset, Dataset]:
    """Split off ``fraction`` of rows per stratum; returns ``(kept, held_out)``.

    ``by`` is ``'country'``, ``'outcome'`` or ``'country_outcome'``.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    if by == "country":
        groups = data.country
    elif by == "outcome":
        groups = data.y
    elif by == "country_outcome":
        groups = np.array([f"{c}\x00{y}" for c, y in zip(data.country, data.y)], dtype=object)
    else:
        raise ValueError(f"unknown stratification {by!r}")
    rng = np.random.default_rng(seed)
    test = _stratified_take(groups, fraction, rng)
    mask = np.zeros(data.n, dtype=bool)
    mask[test] = True
    return data.subset(np.flatnonzero(~mask)), data.subset(np.flatnonzero(mask))


def country_split(data: Dataset, held_out: Iterable[str]) -> tuple[Dataset, Dataset]:
    """``(train, test)`` where test holds exactly the ``held_out`` countries."""
    held = sorted(set(held_out))
    unknown = [c for c in held if c not in set(data.country.tolist())]
    if unknown:
        raise DataError(f"unknown countries: {', '.join(unknown)}")
    in_test = np.isin(data.country, held)
    train, test = data.subset(np.flatnonzero(~in_test)), data.subset(np.flatnonzero(in_test))
    if np.intersect1d(train.row_id, test.row_id).size:
        raise DataError("row_id overlap between train and test")
    return train, test


def fewshot_sample(data: Dataset, country: str, n: int, seed: int) -> Dataset:
    """``n`` rows drawn without replacement from one country."""
    idx = np.flatnonzero(data.country == country)
    if n > idx.size:
        raise DataError(f"requested {n} rows from {country}, only {idx.size} available")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return data.subset(np.sort(rng.choice(idx, size=n, replace=False)))


# ---------------------------------------------------------------------------
# Country audit


def audit_countries(
    data: Dataset,
    prevalence_bounds: tuple[float, float] = PREVALENCE_BOUNDS,
    min_rows: int = MIN_COUNTRY_ROWS,
) -> tuple[Dataset, list[dict]]:
    """Drop countries with implausible on-track prevalence or too few rows."""
    rows = []
    keep = []
    lo, hi = prevalence_bounds
    for c in data.countries():
        mask = data.country == c
        n = int(mask.sum())
        prev = float(data.y[mask].mean())
        reasons = []
        if n < min_rows:
            reasons.append(f"n={n} < {min_rows}")
        if not lo <= prev <= hi:
            reasons.append(f"prevalence {prev:.3f} outside [{lo}, {hi}]")
        if reasons:
            log.warning("excluding %s: %s", c, "; ".join(reasons))
        else:
            keep.append(c)
        rows.append({"country_code": c, "n": n, "prevalence": prev, "kept": not reasons, "reasons": reasons})
    return data.where_country(keep), rows


# ---------------------------------------------------------------------------
# Dataset files

DATASET_COLUMNS: tuple[str, ...] = FEATURES + (OUTCOME, "country_code", "region", "wealth_quintile", "row_id")


def dataset_to_csv(data: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DATASET_COLUMNS)
    for i in range(data.n):
        w.writerow(
            [repr(float(v)) for v in data.X[i]]
            + [int(data.y[i]), data.country[i], data.region[i], int(data.wealth_quintile[i]), int(data.row_id[i])]
        )
    return buf.getvalue()


def write_dataset(data: Dataset, path: str | Path) -> Path:
    return atomic_write_text(path, dataset_to_csv(data))


def read_dataset(path: str | Path) -> Dataset:
    """Load a dataset file written by :func:`write_dataset` (no imputation needed)."""
    table = load_csv(path)
    X = _feature_matrix(table)
    if np.isnan(X).any():
        raise DataError(f"{path}: dataset file has missing feature cells; run ingest first")
    ds = _table_to_dataset(harmonize(table), X)
    q = table.columns.get("wealth_quintile")
    if q is not None and len(q) == ds.n and all(v is not None for v in q):
        ds.wealth_quintile = np.asarray([int(float(v)) for v in q], dtype=np.int64)
    return ds
