"""CSV ingestion and serialization, schema configs, embedded worked-example
fixtures and a synthetic table generator.

Schema config: a flat ``key = value`` text file, ``#`` starts a comment.

    id = Name                      identifier column (required)
    qi = Age,Zipcode               QI columns in order (required)
    qi.Age.lo = 21                 optional domain bounds; missing bounds are
    qi.Age.hi = 60                 filled from the observed data
    sensitive = Disease            sensitive column (required)
    sensitive.values = a,b,c       optional declared universe

Published generalizations are written as one CSV with ``<attr>_lo`` and
``<attr>_hi`` per QI attribute, ``group_id`` and the sensitive column.
Anatomy is written as ``<stem>_qi.csv`` (QI columns + ``group_id``) and
``<stem>_sens.csv`` (``group_id`` + sensitive column).
"""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .model import (
    AttributeSchema,
    ExternalSource,
    MicrodataTable,
    Partition,
    QIAttribute,
    QIGroup,
    Record,
    SchemaError,
)
from .recoding import Anatomy, AnatomyGroup, AnonymizedTable, GeneralizedGroup, Generalization


class DataFormatError(ValueError):
    """Malformed CSV or config input; the message carries the location."""


# -- schema config ------------------------------------------------------------

@dataclass(frozen=True)
class SchemaConfig:
    id: str
    qi: tuple[str, ...]
    sensitive: str
    bounds: dict[str, tuple[int | None, int | None]] = field(default_factory=dict)
    sensitive_values: tuple[str, ...] | None = None

    @classmethod
    def parse(cls, text: str, source: str = "<config>") -> "SchemaConfig":
        kv: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataFormatError(f"{source}:{lineno}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            kv[k] = v
        for req in ("id", "qi", "sensitive"):
            if req not in kv:
                raise DataFormatError(f"{source}: missing required key {req!r}")
        qi = tuple(s.strip() for s in kv["qi"].split(",") if s.strip())
        if not qi:
            raise DataFormatError(f"{source}: 'qi' lists no attributes")
        bounds: dict[str, list] = {name: [None, None] for name in qi}
        for k, v in kv.items():
            if k.startswith("qi.") and k.count(".") >= 2:
                name, which = k[3:].rsplit(".", 1)
                if name not in bounds or which not in ("lo", "hi"):
                    raise DataFormatError(f"{source}: unknown key {k!r}")
                try:
                    bounds[name][0 if which == "lo" else 1] = int(v)
                except ValueError:
                    raise DataFormatError(f"{source}: {k} must be an integer, got {v!r}") from None
        values = None
        if "sensitive.values" in kv:
            values = tuple(s.strip() for s in kv["sensitive.values"].split(",") if s.strip())
        return cls(kv["id"], qi, kv["sensitive"], {n: tuple(b) for n, b in bounds.items()}, values)

    @classmethod
    def load(cls, path: str | Path) -> "SchemaConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise DataFormatError(f"{path}: {e.strerror}") from e
        return cls.parse(text, str(path))

    @classmethod
    def from_schema(cls, schema: AttributeSchema) -> "SchemaConfig":
        return cls(schema.identifier, schema.qi_names, schema.sensitive,
                   {a.name: (a.lo, a.hi) for a in schema.qi}, schema.sensitive_values)

    def to_text(self) -> str:
        lines = [f"id = {self.id}", f"qi = {','.join(self.qi)}"]
        for name in self.qi:
            lo, hi = self.bounds.get(name, (None, None))
            if lo is not None:
                lines.append(f"qi.{name}.lo = {lo}")
            if hi is not None:
                lines.append(f"qi.{name}.hi = {hi}")
        lines.append(f"sensitive = {self.sensitive}")
        if self.sensitive_values:
            lines.append(f"sensitive.values = {','.join(self.sensitive_values)}")
        return "\n".join(lines) + "\n"

    def schema(self, observed_qi: Iterable[tuple[int, ...]] = (),
               observed_values: Iterable[str] = ()) -> AttributeSchema:
        qis = list(observed_qi)
        attrs = []
        for i, name in enumerate(self.qi):
            lo, hi = self.bounds.get(name, (None, None))
            if lo is None or hi is None:
                col = [q[i] for q in qis]
                if not col:
                    raise SchemaError(f"no domain for {name!r}: give bounds or data")
                lo = min(col) if lo is None else lo
                hi = max(col) if hi is None else hi
            attrs.append(QIAttribute(name, lo, hi))
        values = self.sensitive_values or tuple(sorted(set(observed_values)))
        return AttributeSchema(tuple(attrs), self.sensitive, values, self.id)


def _config(config: SchemaConfig | str | Path) -> SchemaConfig:
    return config if isinstance(config, SchemaConfig) else SchemaConfig.load(config)


# -- CSV helpers --------------------------------------------------------------

def _read_csv(source: str | Path | io.StringIO) -> tuple[list[str], list[list[str]], str]:
    name = getattr(source, "name", None) or str(source)
    try:
        if isinstance(source, io.StringIO):
            rows = list(csv.reader(source))
        else:
            with open(source, newline="", encoding="utf-8") as f:
                rows = list(csv.reader(f))
    except OSError as e:
        raise DataFormatError(f"{name}: {e.strerror}") from e
    if not rows:
        raise DataFormatError(f"{name}: empty file, header row expected")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    return header, body, name


def _col(header: list[str], col: str, name: str) -> int:
    try:
        return header.index(col)
    except ValueError:
        raise SchemaError(f"{name}: column {col!r} not in header {header}") from None


def _int(cell: str, name: str, row: int, col: str) -> int:
    try:
        return int(cell.strip())
    except ValueError:
        raise DataFormatError(f"{name}: row {row}, column {col!r}: not an integer: {cell!r}") from None


def _cells(row: list[str], width: int, name: str, lineno: int) -> list[str]:
    if len(row) != width:
        raise DataFormatError(f"{name}: row {lineno}: expected {width} fields, got {len(row)}")
    return [c.strip() for c in row]


def load_table(source: str | Path | io.StringIO, config: SchemaConfig | str | Path) -> MicrodataTable:
    cfg = _config(config)
    header, body, name = _read_csv(source)
    id_i = _col(header, cfg.id, name)
    qi_i = [_col(header, q, name) for q in cfg.qi]
    s_i = _col(header, cfg.sensitive, name)
    ids, qis, vals = [], [], []
    seen = set()
    for lineno, row in enumerate(body, 2):
        cells = _cells(row, len(header), name, lineno)
        rid = cells[id_i]
        if rid in seen:
            raise SchemaError(f"{name}: row {lineno}: duplicate identifier {rid!r}")
        seen.add(rid)
        ids.append(rid)
        qis.append(tuple(_int(cells[i], name, lineno, cfg.qi[j]) for j, i in enumerate(qi_i)))
        vals.append(cells[s_i])
    schema = cfg.schema(qis, vals)
    return MicrodataTable(schema, tuple(Record(i, q, v) for i, q, v in zip(ids, qis, vals)))


def load_external(source: str | Path | io.StringIO, config: SchemaConfig | str | Path,
                  schema: AttributeSchema | None = None) -> ExternalSource:
    """Identifier and QI columns only; a sensitive column, if present, is ignored."""
    cfg = _config(config)
    header, body, name = _read_csv(source)
    id_i = _col(header, cfg.id, name)
    qi_i = [_col(header, q, name) for q in cfg.qi]
    entries = []
    for lineno, row in enumerate(body, 2):
        cells = _cells(row, len(header), name, lineno)
        entries.append((cells[id_i], tuple(_int(cells[i], name, lineno, cfg.qi[j])
                                           for j, i in enumerate(qi_i))))
    if schema is None:
        schema = cfg.schema([q for _, q in entries], cfg.sensitive_values or ("?",))
    return ExternalSource(schema, tuple(entries))


def write_table(table: MicrodataTable, path: str | Path) -> None:
    s = table.schema
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([s.identifier, *s.qi_names, s.sensitive])
        for r in table:
            w.writerow([r.id, *r.qi, r.sensitive])


def _anatomy_paths(path: str | Path) -> tuple[Path, Path]:
    p = Path(path)
    stem = p.name[:-4] if p.name.endswith(".csv") else p.name
    return p.with_name(f"{stem}_qi.csv"), p.with_name(f"{stem}_sens.csv")


def published_paths(published: AnonymizedTable, path: str | Path) -> list[Path]:
    if isinstance(published, Anatomy):
        return list(_anatomy_paths(path))
    return [Path(path)]


def published_to_csv(published: Generalization) -> str:
    s = published.schema
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([c for a in s.qi_names for c in (f"{a}_lo", f"{a}_hi")] + ["group_id", s.sensitive])
    for gid, g in enumerate(published.groups, 1):
        for v in g.sensitive:
            w.writerow([x for iv in g.intervals for x in iv] + [gid, v])
    return buf.getvalue()


def write_published(published: AnonymizedTable, path: str | Path) -> list[Path]:
    s = published.schema
    if isinstance(published, Generalization):
        Path(path).write_text(published_to_csv(published), encoding="utf-8")
        return [Path(path)]
    qpath, spath = _anatomy_paths(path)
    with open(qpath, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([*s.qi_names, "group_id"])
        for q, gid in published.qi_rows():
            w.writerow([*q, gid])
    with open(spath, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["group_id", s.sensitive])
        for gid, v in published.sensitive_rows():
            w.writerow([gid, v])
    return [qpath, spath]


def _published_schema(cfg: SchemaConfig, boxes, values) -> AttributeSchema:
    pts = [tuple(iv[0] for iv in b) for b in boxes] + [tuple(iv[1] for iv in b) for b in boxes]
    schema = cfg.schema(pts, values)
    missing = set(values) - set(schema.sensitive_values)
    if missing:
        raise SchemaError(f"published sensitive values {sorted(missing)} not in declared universe")
    for b in boxes:
        for (lo, hi), a in zip(b, schema.qi):
            if lo > hi or lo < a.lo or hi > a.hi:
                raise SchemaError(f"interval [{lo}, {hi}] outside domain of {a.name!r}")
    return schema


def load_published(path: str | Path | io.StringIO, config: SchemaConfig | str | Path) -> AnonymizedTable:
    """Read a published table; anatomy is detected from the ``_qi``/``_sens`` pair."""
    cfg = _config(config)
    if not isinstance(path, io.StringIO):
        path = Path(path)
        qpath, spath = _anatomy_paths(path)
        if not path.exists() and qpath.exists() and spath.exists():
            return _load_anatomy(qpath, spath, cfg)
    header, body, name = _read_csv(path)
    cols = [(_col(header, f"{a}_lo", name), _col(header, f"{a}_hi", name)) for a in cfg.qi]
    s_i = _col(header, cfg.sensitive, name)
    g_i = header.index("group_id") if "group_id" in header else None
    groups: dict = defaultdict(list)
    for lineno, row in enumerate(body, 2):
        cells = _cells(row, len(header), name, lineno)
        box = tuple((_int(cells[lo], name, lineno, header[lo]), _int(cells[hi], name, lineno, header[hi]))
                    for lo, hi in cols)
        key = cells[g_i] if g_i is not None else box
        groups[key].append((box, cells[s_i]))
    boxes = [rows[0][0] for rows in groups.values()]
    for key, rows in groups.items():
        if len({b for b, _ in rows}) != 1:
            raise DataFormatError(f"{name}: group {key!r} rows have differing intervals")
    values = [v for rows in groups.values() for _, v in rows]
    schema = _published_schema(cfg, boxes, values)
    gg = [GeneralizedGroup(rows[0][0], tuple(v for _, v in rows)) for rows in groups.values()]
    return Generalization(schema, gg, has_boundaries=g_i is not None)


def _load_anatomy(qpath: Path, spath: Path, cfg: SchemaConfig) -> Anatomy:
    qh, qb, qn = _read_csv(qpath)
    sh, sb, sn = _read_csv(spath)
    qcols = [_col(qh, a, qn) for a in cfg.qi]
    qg = _col(qh, "group_id", qn)
    sg, sv = _col(sh, "group_id", sn), _col(sh, cfg.sensitive, sn)
    qis: dict[str, list] = defaultdict(list)
    sens: dict[str, list] = defaultdict(list)
    for lineno, row in enumerate(qb, 2):
        cells = _cells(row, len(qh), qn, lineno)
        qis[cells[qg]].append(tuple(_int(cells[i], qn, lineno, qh[i]) for i in qcols))
    for lineno, row in enumerate(sb, 2):
        cells = _cells(row, len(sh), sn, lineno)
        sens[cells[sg]].append(cells[sv])
    if set(qis) != set(sens):
        raise DataFormatError(f"{qn} and {sn} disagree on group ids")
    for g in qis:
        if len(qis[g]) != len(sens[g]):
            raise DataFormatError(f"group {g!r}: {len(qis[g])} QI rows but {len(sens[g])} sensitive rows")
    pts = [q for rows in qis.values() for q in rows]
    values = [v for rows in sens.values() for v in rows]
    schema = cfg.schema(pts, values)
    return Anatomy(schema, (AnatomyGroup(tuple(qis[g]), tuple(sens[g])) for g in qis))


# -- synthetic data -----------------------------------------------------------

def default_synth_schema(universe_size: int = 50) -> AttributeSchema:
    """Four integer QI attributes shaped like a census extract and a
    50-value sensitive attribute."""
    qi = (QIAttribute("Age", 0, 78), QIAttribute("Gender", 0, 1),
          QIAttribute("Education", 0, 16), QIAttribute("Birthplace", 0, 56))
    values = tuple(f"s{i:02d}" for i in range(universe_size))
    return AttributeSchema(qi, "Occupation", values, "id")


def synthesize(n: int, schema: AttributeSchema | None = None, rho: float = 0.0,
               seed: int = 0) -> MicrodataTable:
    """QI values uniform over their domains; with probability ``rho`` the
    sensitive value is a fixed bucketing of the first QI attribute into the
    universe, otherwise uniform. Reproducible for a given seed."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must lie in [0, 1]")
    schema = schema or default_synth_schema()
    gen = np.random.default_rng(seed)
    cols = [gen.integers(a.lo, a.hi + 1, size=n) for a in schema.qi]
    universe = schema.sensitive_values
    u = len(universe)
    a0 = schema.qi[0]
    bucket = ((cols[0] - a0.lo) * u) // a0.size
    uniform = gen.integers(0, u, size=n)
    pick = np.where(gen.random(n) < rho, bucket, uniform)
    width = len(str(n))
    qis = np.stack(cols, axis=1).tolist()
    recs = tuple(Record(f"r{i:0{width}d}", tuple(q), universe[p])
                 for i, (q, p) in enumerate(zip(qis, pick.tolist())))
    return MicrodataTable(schema, recs)


# -- embedded worked-example fixtures -----------------------------------------

_DISEASES = "bronchitis,diabetes,dyspepsia,flu,gastritis"

FIXTURE_CONFIG = SchemaConfig.parse(f"""
id = Name
qi = Age,Zipcode
qi.Age.lo = 21
qi.Age.hi = 60
qi.Zipcode.lo = 10000
qi.Zipcode.hi = 63000
sensitive = Disease
sensitive.values = {_DISEASES}
""")

FIXTURE_CONFIG_1D = SchemaConfig.parse("""
id = Name
qi = Age
qi.Age.lo = 21
qi.Age.hi = 60
sensitive = Disease
sensitive.values = dyspepsia,flu
""")

_PEOPLE = [("Ann", 21, 10000), ("Bob", 27, 18000), ("Cate", 32, 35000), ("Don", 32, 35000),
           ("Ed", 54, 60000), ("Fred", 60, 63000), ("Gill", 60, 63000), ("Hera", 60, 63000)]


def _micro_csv(diseases: str) -> str:
    rows = ["Name,Age,Zipcode,Disease"]
    for (name, age, zc), dis in zip(_PEOPLE, diseases.split()):
        rows.append(f"{name},{age},{zc},{dis}")
    return "\n".join(rows) + "\n"


_MICRO = {
    "T1": _micro_csv("dyspepsia flu gastritis bronchitis gastritis flu dyspepsia diabetes"),
    "T3": _micro_csv("dyspepsia flu gastritis gastritis bronchitis flu dyspepsia diabetes"),
    "T5": _micro_csv("dyspepsia flu gastritis gastritis flu bronchitis dyspepsia diabetes"),
    "T8": _micro_csv("flu dyspepsia gastritis gastritis dyspepsia bronchitis flu diabetes"),
    # Example 2's alternative instance: Ed and Fred exchange diseases
    "T1_alt": _micro_csv("dyspepsia flu gastritis bronchitis flu gastritis dyspepsia diabetes"),
}

_T9 = """Name,Age,Disease
Ann,21,dyspepsia
Bob,27,dyspepsia
Cate,32,dyspepsia
Don,32,flu
Ed,54,flu
Fred,60,flu
Gill,60,flu
"""

_E1 = """Name,Age,Zipcode
Ann,21,10000
Bob,27,18000
Bruce,29,19000
Cate,32,35000
Don,32,35000
Ed,54,60000
Fred,60,63000
Gill,60,63000
Hera,60,63000
"""


def _gen_csv(groups: list[tuple[str, list[str]]], one_d: bool = False) -> str:
    """groups: (box as 'alo ahi [zlo zhi]', values)."""
    head = "Age_lo,Age_hi,group_id,Disease" if one_d else "Age_lo,Age_hi,Zipcode_lo,Zipcode_hi,group_id,Disease"
    rows = [head]
    for gid, (box, vals) in enumerate(groups, 1):
        b = ",".join(box.split())
        rows += [f"{b},{gid},{v}" for v in vals]
    return "\n".join(rows) + "\n"


_PUBLISHED = {
    "T2*": _gen_csv([("21 27 10000 18000", ["dyspepsia", "flu"]),
                     ("32 32 35000 35000", ["gastritis", "bronchitis"]),
                     ("54 60 60000 63000", ["gastritis", "flu", "dyspepsia", "diabetes"])]),
    "T4*": _gen_csv([("21 27 10000 18000", ["dyspepsia", "flu"]),
                     ("32 60 35000 63000", ["gastritis", "gastritis", "bronchitis", "flu",
                                            "dyspepsia", "diabetes"])]),
    "T6*": _gen_csv([("21 32 10000 35000", ["dyspepsia", "flu", "gastritis", "gastritis"]),
                     ("54 60 60000 63000", ["flu", "bronchitis"]),
                     ("60 60 63000 63000", ["dyspepsia", "diabetes"])]),
    "T7*": _gen_csv([("21 27 10000 18000", ["dyspepsia", "flu"]),
                     ("54 60 60000 63000", ["dyspepsia", "flu"]),
                     ("32 60 35000 63000", ["gastritis", "bronchitis"]),
                     ("32 60 35000 63000", ["diabetes", "gastritis"])]),
    "T10*": _gen_csv([("21 27", ["flu", "dyspepsia"]),
                      ("32 32", ["dyspepsia", "flu"]),
                      ("54 60", ["flu", "flu", "flu"])], one_d=True),
}

# the k-anonymous partition injected into the masking example
MASK_FIXTURE_PARTITION = (("Ann", "Bob"), ("Cate", "Don"), ("Ed", "Fred", "Gill"))

FIXTURE_NAMES = tuple(_MICRO) + ("T9", "E1") + tuple(_PUBLISHED)


def fixture_csv(name: str) -> str:
    if name in _MICRO:
        return _MICRO[name]
    if name == "T9":
        return _T9
    if name == "E1":
        return _E1
    if name in _PUBLISHED:
        return _PUBLISHED[name]
    raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURE_NAMES)}")


def fixture_config(name: str) -> SchemaConfig:
    return FIXTURE_CONFIG_1D if name in ("T9", "T10*") else FIXTURE_CONFIG


def fixture(name: str):
    """A worked-example table: MicrodataTable, ExternalSource (E1) or a
    published Generalization (names ending in '*')."""
    text = fixture_csv(name)
    cfg = fixture_config(name)
    if name == "E1":
        return load_external(io.StringIO(text), cfg, cfg.schema())
    if name in _PUBLISHED:
        return load_published(io.StringIO(text), cfg)
    return load_table(io.StringIO(text), cfg)


def partition_by_ids(table: MicrodataTable, id_groups: Iterable[Iterable[str]]) -> Partition:
    by_id = table.by_id()
    return Partition(tuple(QIGroup(tuple(by_id[i] for i in g)) for g in id_groups))
