"""Run-directory persistence, resume, and report generation.

A run directory is the unit of truth:

    config.json              effective configuration, verbatim
    space.json               search-space document
    history.csv              one row per completed generation
    generations/gen%04d.json population snapshot per generation (atomic)
    best.json                final result; its presence marks completion

history.csv holds only the reproducible trajectory
(``generation,best_fitness,mean_fitness,evals``) so identically seeded runs
produce bitwise-identical files; per-generation wallclock lives in the
snapshots.  Snapshots and best.json are written via temp-file-then-rename, so
a killed run never leaves a half-written artifact behind.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

from .de import Individual, Population
from .errors import RunLogError, SpaceError
from .fitness import Metrics
from .hyperspace import BoxSpace, SpaceSpec, render_layers, space_document

HISTORY_HEADER = "generation,best_fitness,mean_fitness,evals"
SNAPSHOT_PATTERN = "gen%04d.json"


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    evals: int
    wallclock_secs: float = 0.0

    def csv_row(self) -> str:
        return f"{self.generation},{self.best_fitness:.6f},{self.mean_fitness:.6f},{self.evals}"


@dataclass
class RunResult:
    best: Individual
    best_phenotype: object
    history: list[GenerationRecord]
    config: dict
    space: dict
    stats: dict


def config_snapshot(algorithm: str, cfg, **extra) -> dict:
    snap = {"algorithm": algorithm}
    snap.update(asdict(cfg))
    snap.update(extra)
    return snap


def space_snapshot(space) -> dict:
    if isinstance(space, SpaceSpec):
        return space_document(space)
    if isinstance(space, BoxSpace):
        return {"kind": "box", "lower": list(space.lower), "upper": list(space.upper)}
    raise TypeError(f"unknown space type {type(space)!r}")


def space_from_snapshot(doc: dict):
    from .hyperspace import load_space

    if doc.get("kind") == "box":
        return BoxSpace(tuple(doc["lower"]), tuple(doc["upper"]))
    return load_space(json.dumps(doc))


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _individual_to_dict(ind: Individual) -> dict:
    return {
        "genotype": list(ind.genotype),
        "fitness": ind.fitness,
        "eval_id": ind.eval_id,
        "metrics": ind.metrics.to_dict() if ind.metrics is not None else None,
    }


def _individual_from_dict(raw: dict) -> Individual:
    metrics = None
    if raw.get("metrics") and raw["metrics"].get("confusion"):
        metrics = Metrics.from_confusion(raw["metrics"]["confusion"])
    return Individual(
        genotype=tuple(float(v) for v in raw["genotype"]),
        fitness=raw.get("fitness"),
        metrics=metrics,
        eval_id=raw.get("eval_id"),
    )


class RunLog:
    """Single writer for one run directory; see the module docstring."""

    def __init__(self, directory: Path):
        self.dir = Path(directory)
        self.generations_dir = self.dir / "generations"
        self.history_path = self.dir / "history.csv"
        self._last_generation = 0

    # -- opening ---------------------------------------------------------

    @classmethod
    def open_run(cls, directory, config: dict, space_doc: dict) -> "RunLog":
        """Create a fresh run directory, or reopen a compatible unfinished one."""
        run = cls(Path(directory))
        if run.history_path.exists():
            run._reopen(config, space_doc)
        else:
            run._create(config, space_doc)
        return run

    def _create(self, config: dict, space_doc: dict) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        leftovers = [p.name for p in self.dir.iterdir()]
        if leftovers:
            raise RunLogError(
                f"{self.dir} is not empty and not a run directory (found {leftovers[:3]})"
            )
        self.generations_dir.mkdir()
        _write_atomic(self.dir / "config.json", json.dumps(config, indent=2) + "\n")
        _write_atomic(self.dir / "space.json", json.dumps(space_doc, indent=2) + "\n")
        self.history_path.write_text(HISTORY_HEADER + "\n", encoding="utf-8")
        self._last_generation = 0

    def _reopen(self, config: dict, space_doc: dict) -> None:
        if (self.dir / "best.json").exists():
            raise RunLogError(f"{self.dir} is already complete; refusing to resume")
        for required in ("config.json", "space.json"):
            if not (self.dir / required).exists():
                raise RunLogError(f"{self.dir} is missing {required}; not a usable run directory")
        stored_space = json.loads((self.dir / "space.json").read_text(encoding="utf-8"))
        if stored_space != space_doc:
            raise RunLogError(f"{self.dir} was created for a different space")
        stored_config = json.loads((self.dir / "config.json").read_text(encoding="utf-8"))
        if stored_config != config:
            raise RunLogError(f"{self.dir} was created with a different configuration")
        rows = self._read_rows()
        self._last_generation = int(rows[-1][0]) if rows else 0

    # -- writing ---------------------------------------------------------

    def append_generation(self, population: Population, record: GenerationRecord) -> None:
        if record.generation != self._last_generation + 1:
            raise RunLogError(
                f"generation gap: expected {self._last_generation + 1}, got {record.generation}"
            )
        snapshot = {
            "generation": record.generation,
            "evals": record.evals,
            "wallclock_secs": record.wallclock_secs,
            "best_fitness": record.best_fitness,
            "mean_fitness": record.mean_fitness,
            "individuals": [_individual_to_dict(ind) for ind in population.individuals],
        }
        path = self.generations_dir / (SNAPSHOT_PATTERN % record.generation)
        _write_atomic(path, json.dumps(snapshot, indent=2) + "\n")
        with open(self.history_path, "a", encoding="utf-8") as fh:
            fh.write(record.csv_row() + "\n")
        self._last_generation = record.generation

    def finish(self, result: RunResult) -> None:
        payload = {
            "fitness": result.best.fitness,
            "genotype": list(result.best.genotype),
            "phenotype": result.best_phenotype,
            "metrics": result.best.metrics.to_dict() if result.best.metrics else None,
            "generations": result.history[-1].generation if result.history else 0,
            "stats": result.stats,
        }
        _write_atomic(self.dir / "best.json", json.dumps(payload, indent=2) + "\n")

    # -- reading ---------------------------------------------------------

    def _read_rows(self) -> list[list[str]]:
        lines = self.history_path.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != HISTORY_HEADER:
            raise RunLogError(f"{self.history_path} has an unexpected header")
        return [line.split(",") for line in lines[1:] if line]

    def completed_generations(self) -> int:
        return self._last_generation

    def records(self) -> list[GenerationRecord]:
        out = []
        for row in self._read_rows():
            generation = int(row[0])
            snapshot = self._read_snapshot(generation)
            out.append(
                GenerationRecord(
                    generation=generation,
                    best_fitness=float(row[1]),
                    mean_fitness=float(row[2]),
                    evals=int(row[3]),
                    wallclock_secs=float(snapshot.get("wallclock_secs", 0.0)),
                )
            )
        return out

    def _read_snapshot(self, generation: int) -> dict:
        path = self.generations_dir / (SNAPSHOT_PATTERN % generation)
        if not path.exists():
            raise RunLogError(f"missing snapshot {path}")
        return json.loads(path.read_text(encoding="utf-8"))

    def load_population(self, generation: int) -> tuple[Population, int]:
        snapshot = self._read_snapshot(generation)
        individuals = [_individual_from_dict(raw) for raw in snapshot["individuals"]]
        return Population(individuals, generation=generation), int(snapshot["evals"])


# -- read-only access to finished runs ------------------------------------


def read_history_rows(run_dir) -> list[list[str]]:
    """Raw history rows as strings, preserving the on-disk formatting."""
    path = Path(run_dir) / "history.csv"
    if not path.exists():
        raise RunLogError(f"{run_dir} has no history.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != HISTORY_HEADER:
        raise RunLogError(f"{path} has an unexpected header")
    rows = [line.split(",") for line in lines[1:] if line]
    if not rows:
        raise RunLogError(f"{run_dir} has an empty history")
    return rows


def read_best(run_dir) -> dict:
    path = Path(run_dir) / "best.json"
    if not path.exists():
        raise RunLogError(f"{run_dir} is not a completed run (no best.json)")
    return json.loads(path.read_text(encoding="utf-8"))


def is_run_dir(path) -> bool:
    return (Path(path) / "history.csv").exists()


# -- reporting -------------------------------------------------------------

SVG_WIDTH, SVG_HEIGHT = 640, 400
SVG_MARGIN = (60.0, 20.0, 20.0, 40.0)  # left, top, right, bottom


def _svg_curve(rows: list[list[str]]) -> str:
    left, top, right, bottom = SVG_MARGIN
    plot_w = SVG_WIDTH - left - right
    plot_h = SVG_HEIGHT - top - bottom
    gens = [float(r[0]) for r in rows]
    best = [float(r[1]) for r in rows]
    mean = [float(r[2]) for r in rows]
    xmin, xmax = min(gens), max(gens)
    ymin, ymax = min(best + mean), max(best + mean)
    if xmax == xmin:
        xmin, xmax = xmin - 0.5, xmax + 0.5
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    sx = plot_w / (xmax - xmin)
    sy = plot_h / (ymax - ymin)
    # Polyline points stay in data coordinates; the group transform maps them
    # to screen space with y flipped.
    transform = f"translate({left} {top}) scale({sx:.9g} {-sy:.9g}) translate({-xmin:.9g} {-ymax:.9g})"
    best_pts = " ".join(f"{int(g)},{v:.6f}" for g, v in zip(gens, best))
    mean_pts = " ".join(f"{int(g)},{v:.6f}" for g, v in zip(gens, mean))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="monospace" font-size="12">',
        f'<rect width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<g transform="{transform}">',
        f'<polyline id="best" points="{best_pts}" fill="none" stroke="#1f6fb2" '
        f'stroke-width="2" vector-effect="non-scaling-stroke"/>',
        f'<polyline id="mean" points="{mean_pts}" fill="none" stroke="#c23b22" '
        f'stroke-width="1.5" stroke-dasharray="6 3" vector-effect="non-scaling-stroke"/>',
        "</g>",
        f'<text x="{left}" y="{top + plot_h + 16}">{int(min(gens))}</text>',
        f'<text x="{left + plot_w - 8}" y="{top + plot_h + 16}">{int(max(gens))}</text>',
        f'<text x="4" y="{top + plot_h}">{ymin:.3f}</text>',
        f'<text x="4" y="{top + 10}">{ymax:.3f}</text>',
        f'<text x="{left + plot_w / 2 - 36}" y="{SVG_HEIGHT - 8}">generation</text>',
        f'<text x="4" y="{top + plot_h / 2}" transform="rotate(-90 12 {top + plot_h / 2})">fitness</text>',
        f'<text x="{left + 12}" y="{top + 12}" fill="#1f6fb2">best</text>',
        f'<text x="{left + 60}" y="{top + 12}" fill="#c23b22">mean</text>',
        "</svg>",
    ]
    return "\n".join(lines) + "\n"


def _best_table(best: dict) -> str:
    phenotype = best.get("phenotype")
    lines = ["best configuration", "-" * 40]
    if isinstance(phenotype, dict):
        width = max(len(name) for name in phenotype)
        for name, value in phenotype.items():
            lines.append(f"{name:<{width}}  {value}")
        try:
            layers = render_layers(phenotype)
        except SpaceError:
            layers = None
        if layers is not None:
            lines += ["", "rendered layers", "-" * 40]
            for i, layer in enumerate(layers, start=1):
                desc = ", ".join(f"{k}={v}" for k, v in layer.items() if k != "type")
                lines.append(f"{i:>2}  {layer['type']:<8} {desc}")
    else:
        for j, value in enumerate(phenotype):
            lines.append(f"x[{j}]  {value}")
    lines += ["", f"fitness  {best['fitness']:.6f}"]
    return "\n".join(lines) + "\n"


def report(run_dir, out_dir) -> list[str]:
    """Emit the report bundle for one completed run; returns written names."""
    rows = read_history_rows(run_dir)
    best = read_best(run_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    curve_lines = ["generation,best_fitness,mean_fitness"]
    curve_lines += [",".join(row[:3]) for row in rows]
    (out / "curve.csv").write_text("\n".join(curve_lines) + "\n", encoding="utf-8")
    written.append("curve.csv")

    (out / "curve.svg").write_text(_svg_curve(rows), encoding="utf-8")
    written.append("curve.svg")

    (out / "best_phenotype.json").write_text(json.dumps(best, indent=2) + "\n", encoding="utf-8")
    written.append("best_phenotype.json")

    (out / "best_table.txt").write_text(_best_table(best), encoding="utf-8")
    written.append("best_table.txt")

    notes = []
    if best.get("metrics") and best["metrics"].get("confusion"):
        confusion = best["metrics"]["confusion"]
        lines = [",".join(str(v) for v in row) for row in confusion]
        (out / "confusion.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append("confusion.csv")
    else:
        notes.append("confusion.csv skipped: run has no metrics")

    index = [f"report for {Path(run_dir).name}"] + written + notes
    (out / "index.txt").write_text("\n".join(index) + "\n", encoding="utf-8")
    written.append("index.txt")
    return written


# -- comparison ------------------------------------------------------------


def _member_runs(path: Path) -> list[Path]:
    if is_run_dir(path):
        return [path]
    members = sorted(p for p in path.iterdir() if p.is_dir() and is_run_dir(p))
    if not members:
        raise RunLogError(f"{path} is neither a run directory nor a group of runs")
    return members


def compare(run_dirs, out_dir) -> list[dict]:
    """Tabulate bests (and metrics when present) across runs or run groups.

    Each argument may be a single run directory or a directory of runs; the
    mean column averages member bests arithmetically.  Rows are sorted by
    best fitness, descending.
    """
    if len(run_dirs) < 2:
        raise RunLogError("compare needs at least two run directories")
    rows = []
    for raw in run_dirs:
        path = Path(raw)
        members = _member_runs(path)
        bests = [read_best(m) for m in members]
        values = [b["fitness"] for b in bests]
        top = bests[max(range(len(values)), key=values.__getitem__)]
        row = {
            "label": path.name,
            "runs": len(members),
            "best_fitness": max(values),
            "mean_best": sum(values) / len(values),
        }
        metrics = top.get("metrics")
        if metrics:
            row.update(
                precision=metrics["macro_precision"],
                recall=metrics["macro_recall"],
                f1=metrics["macro_f1"],
                accuracy=metrics["accuracy"],
            )
        rows.append(row)
    rows.sort(key=lambda r: r["best_fitness"], reverse=True)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    columns = ["label", "runs", "best_fitness", "mean_best", "precision", "recall", "f1", "accuracy"]

    def fmt(row, col):
        value = row.get(col, "")
        if isinstance(value, float):
            return f"{value:.6f}"
        return str(value)

    csv_lines = [",".join(columns)]
    csv_lines += [",".join(fmt(row, col) for col in columns) for row in rows]
    (out / "comparison.csv").write_text("\n".join(csv_lines) + "\n", encoding="utf-8")

    widths = {col: max(len(col), *(len(fmt(row, col)) for row in rows)) for col in columns}
    txt_lines = ["  ".join(col.ljust(widths[col]) for col in columns)]
    for row in rows:
        txt_lines.append("  ".join(fmt(row, col).ljust(widths[col]) for col in columns))
    (out / "comparison.txt").write_text("\n".join(txt_lines) + "\n", encoding="utf-8")
    return rows
