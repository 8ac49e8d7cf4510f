"""End-to-end experiment: rubric generation, alignment, grading, statistics, and reporting.

Every step reads and writes artifacts under one run directory::

    <out>/
      manifest.json                       artifact digests + provenance
      rubrics/<item>__<setting>.json      raw completion and parsed rules
      rubrics/<item>__<setting>.prompt.txt
      alignment/<item>__<setting>.json    per-rule match evidence
      grading/<item>__<setting>.jsonl     one outcome per sampled response
      grading/<item>__<setting>.summary.json
      stats/stats.json
      annotations/annotations.jsonl
      report/report.md, report/report.json

Artifacts carry no timestamps or absolute paths, so two runs over the same
inputs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .align import (
    AlignmentConfig,
    AlignmentReport,
    GeneratedRubric,
    JaccardScorer,
    RemoteSimilarityScorer,
    Rule,
    align,
    human_rules,
)
from .errors import (
    CAUSES,
    Channel,
    annotate,
    cause_proportions,
    collect_incorrect_rules,
    load_annotations,
)
from .gateway import (
    Backend,
    ChatAPIBackend,
    ChatParams,
    FunctionBackend,
    GatewayError,
    MockBackend,
    RecordingBackend,
    ResponseCache,
    cached_complete,
    transcript_digest,
)
from .grading import GradingAborted, grade_item
from .items import AssessmentItem, load_items, sample_balanced, select_graded_examples
from .prompts import (
    RULE_SEPARATOR,
    ConfigurationError,
    GenerationSetting,
    RubricVariant,
    choose_example_items,
    render_rubric_prompt,
)
from .stats import SummaryStat, mean_std, paired_t_test, pooled_t_test, spearman

__all__ = [
    "SettingSpec",
    "PAPER_SETTINGS",
    "ExperimentConfig",
    "RunDir",
    "StepResult",
    "MissingArtifactError",
    "EmptyRunError",
    "make_backend",
    "make_scorer",
    "gen_rubrics",
    "run_alignment",
    "run_grading",
    "run_stats",
    "run_annotation",
    "build_report",
    "run_all",
    "record_fixture",
]

log = logging.getLogger(__name__)


class MissingArtifactError(FileNotFoundError):
    pass


class EmptyRunError(RuntimeError):
    pass


@dataclass(frozen=True)
class SettingSpec:
    """One experimental condition: how its rubric is obtained and how grading uses it.

    ``source`` is ``"none"`` (no rubric), ``"human"`` (the item's own rules),
    or ``"generated"`` (produced under ``generation``).
    """

    name: str
    label: str
    source: str
    generation: GenerationSetting | None = None


PAPER_SETTINGS: dict[str, SettingSpec] = {
    s.name: s
    for s in [
        SettingSpec("no_ar", "No A.R. (control)", "none"),
        SettingSpec("human_ar", "Human A.R. (comparison)", "human"),
        SettingSpec("oneshot", "One-shot A.R.", "generated", GenerationSetting("oneshot")),
        SettingSpec("fullshot", "Full-shot A.R.", "generated", GenerationSetting("fullshot")),
        SettingSpec(
            "fullshot_holistic",
            "Full-shot A.R. + Holistic Rubrics",
            "generated",
            GenerationSetting("fullshot", include_holistic=True),
        ),
        SettingSpec(
            "fullshot_graded",
            "Full-shot A.R. + Graded Responses",
            "generated",
            GenerationSetting("fullshot", include_graded_responses=True),
        ),
    ]
}

DEFAULT_TTESTS = (("fullshot_holistic", "fullshot"), ("fullshot_graded", "fullshot"))


@dataclass
class ExperimentConfig:
    items: str = ""
    backend: str = ""
    cache: str | None = None
    out: str = "runs/default"
    seed: int = 0
    n: int = 100
    settings: list[str] = field(default_factory=lambda: list(PAPER_SETTINGS))
    model: str = "mixtral-8x7b-instruct"
    temperature: float = 0.0
    top_p: float = 0.01
    max_tokens: int = 512
    tau_precision: float = 0.5
    tau_recall: float = 0.6
    max_graded: int = 5
    scorer: str = "jaccard"
    workers: int = 1
    ttests: list[list[str]] = field(default_factory=lambda: [list(p) for p in DEFAULT_TTESTS])
    unpaired: bool = False
    alpha: float = 0.05
    custom_settings: dict[str, dict] = field(default_factory=dict)

    # Locations only; excluded from the config digest.
    _LOCATION_FIELDS = ("out", "cache")

    @classmethod
    def from_file(cls, path: str | Path) -> ExperimentConfig:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {unknown}")
        cfg = cls(**doc)
        if isinstance(cfg.settings, str):
            cfg.settings = [s.strip() for s in cfg.settings.split(",") if s.strip()]
        return cfg

    def with_overrides(self, **overrides) -> ExperimentConfig:
        doc = asdict(self)
        doc.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig.from_dict(doc)

    def setting_specs(self) -> dict[str, SettingSpec]:
        specs = dict(PAPER_SETTINGS)
        for name, body in self.custom_settings.items():
            body = dict(body)
            label = body.pop("label", name)
            source = body.pop("source", "generated")
            gen = GenerationSetting(**body) if source == "generated" else None
            specs[name] = SettingSpec(name, label, source, gen)
        return specs

    def validate(self) -> None:
        if not self.settings:
            raise ConfigurationError("settings must be non-empty")
        specs = self.setting_specs()
        unknown = [s for s in self.settings if s not in specs]
        if unknown:
            raise ConfigurationError(f"unknown settings: {unknown}")
        if self.n < 1:
            raise ConfigurationError("n must be >= 1")
        if not self.items or not Path(self.items).is_file():
            raise ConfigurationError(f"items file not found: {self.items!r}")
        AlignmentConfig(self.tau_precision, self.tau_recall)
        self.params()

    def params(self) -> ChatParams:
        try:
            return ChatParams(self.model, self.temperature, self.top_p, self.max_tokens)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    def alignment_config(self) -> AlignmentConfig:
        return AlignmentConfig(self.tau_precision, self.tau_recall)

    def digest(self) -> str:
        doc = {k: v for k, v in asdict(self).items() if k not in self._LOCATION_FIELDS}
        return _sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")))


def _sha256(text: str | bytes) -> str:
    data = text.encode("utf-8") if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class RunDir:
    """Run directory whose writes all pass through one manifest writer."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._lock = threading.Lock()

    @property
    def manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def manifest(self) -> dict:
        if self.manifest_path.exists():
            return json.loads(self.manifest_path.read_text(encoding="utf-8"))
        return {"artifacts": {}, "provenance": {}}

    def write_text(self, rel: str, text: str) -> Path:
        path = self.root / rel
        with self._lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
            self._record(rel, text.encode("utf-8"))
        return path

    def write_json(self, rel: str, obj) -> Path:
        return self.write_text(rel, _dumps(obj))

    def register(self, rel: str) -> None:
        """Record the digest of a file written by other code (append-only logs)."""
        with self._lock:
            self._record(rel, (self.root / rel).read_bytes())

    def _record(self, rel: str, data: bytes) -> None:
        man = self.manifest()
        man["artifacts"][rel] = _sha256(data)
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(_dumps(man), encoding="utf-8")

    def set_provenance(self, **entries) -> None:
        with self._lock:
            man = self.manifest()
            man["provenance"].update(entries)
            self.root.mkdir(parents=True, exist_ok=True)
            self.manifest_path.write_text(_dumps(man), encoding="utf-8")

    def read_json(self, rel: str):
        path = self.root / rel
        if not path.exists():
            raise MissingArtifactError(f"missing artifact: {rel}")
        return json.loads(path.read_text(encoding="utf-8"))

    def exists(self, rel: str) -> bool:
        return (self.root / rel).exists()


@dataclass
class StepResult:
    written: list[str] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _key(item_id: str, setting: str) -> str:
    return f"{item_id}__{setting}"


def make_backend(spec: str, items: Sequence[AssessmentItem] = (), seed: int = 0) -> Backend:
    """Backend from a spec string: ``mock:<fixture.json>``, ``sim``, or an http(s) base URL."""
    if spec.startswith("mock:"):
        path = spec[len("mock:"):]
        if not Path(path).is_file():
            raise ConfigurationError(f"mock fixture not found: {path!r}")
        return MockBackend.from_file(path)
    if spec == "sim":
        from .synthetic import SyntheticModel

        return FunctionBackend(SyntheticModel(items, seed))
    if spec.startswith(("http://", "https://")):
        return ChatAPIBackend(spec)
    raise ConfigurationError(f"unrecognized backend spec {spec!r}")


def make_scorer(spec: str):
    if spec == "jaccard":
        return JaccardScorer()
    if spec.startswith("remote:"):
        return RemoteSimilarityScorer(spec[len("remote:"):])
    raise ConfigurationError(f"unrecognized scorer spec {spec!r}")


def _prepare(cfg: ExperimentConfig) -> tuple[list[AssessmentItem], RunDir]:
    cfg.validate()
    items = load_items(cfg.items)
    run = RunDir(cfg.out)
    fixtures = {"items": _sha256(Path(cfg.items).read_bytes())}
    if cfg.backend.startswith("mock:") and Path(cfg.backend[5:]).is_file():
        fixtures["mock"] = _sha256(Path(cfg.backend[5:]).read_bytes())
    run.set_provenance(
        config_digest=cfg.digest(),
        fixture_digests=fixtures,
        settings=list(cfg.settings),
        items=[it.id for it in items],
        seed=cfg.seed,
        n=cfg.n,
    )
    return items, run


def _evaluation_ids(item: AssessmentItem, cfg: ExperimentConfig) -> list[str]:
    if not item.responses:
        return []
    return sample_balanced(item, cfg.n, cfg.seed).ids()


def _generation_setting(spec: SettingSpec, cfg: ExperimentConfig) -> GenerationSetting:
    gen = spec.generation
    return GenerationSetting(
        gen.in_context, gen.include_holistic, gen.include_graded_responses,
        max_graded=cfg.max_graded,
        seed=cfg.seed,
    )


def _rubric_doc(rubric: GeneratedRubric, digest: str | None = None) -> dict:
    return {
        "item_id": rubric.item_id,
        "setting": rubric.setting,
        "raw": rubric.raw,
        "rules": [r.text for r in rubric.rules],
        "transcript_digest": digest,
    }


def load_rubric(run: RunDir, item_id: str, setting: str) -> GeneratedRubric:
    doc = run.read_json(f"rubrics/{_key(item_id, setting)}.json")
    rules = tuple(Rule(t, i) for i, t in enumerate(doc["rules"]))
    return GeneratedRubric(doc["item_id"], doc["setting"], doc["raw"], rules)


def gen_rubrics(
    cfg: ExperimentConfig, backend: Backend | None = None, cache: ResponseCache | None = None
) -> StepResult:
    """Obtain a rubric for every (item, setting); generated ones go through the backend."""
    items, run = _prepare(cfg)
    specs = cfg.setting_specs()
    params = cfg.params()
    backend = backend or make_backend(cfg.backend, items, cfg.seed)
    if cache is None and cfg.cache:
        cache = ResponseCache(cfg.cache)
    result = StepResult()
    for name in cfg.settings:
        spec = specs[name]
        for item in items:
            key = _key(item.id, name)
            digest = None
            if spec.source == "none":
                rubric = GeneratedRubric(item.id, name, "", ())
            elif spec.source == "human":
                rules = tuple(human_rules(item))
                raw = f" {RULE_SEPARATOR} ".join(r.text for r in rules)
                rubric = GeneratedRubric(item.id, name, raw, rules)
            else:
                setting = _generation_setting(spec, cfg)
                try:
                    examples = choose_example_items(item, items, setting)
                    graded = None
                    if setting.include_graded_responses:
                        graded = select_graded_examples(
                            item, setting.max_graded, cfg.seed, exclude=_evaluation_ids(item, cfg)
                        )
                    transcript = render_rubric_prompt(item, setting, examples, graded)
                    run.write_text(f"rubrics/{key}.prompt.txt", transcript.render())
                    raw = cached_complete(cache, backend, transcript, params)
                except (GatewayError, ConfigurationError) as exc:
                    log.error("rubric generation failed for %s: %s", key, exc)
                    result.failures.append({"item": item.id, "setting": name, "error": str(exc)})
                    continue
                digest = transcript_digest(transcript)
                rubric = GeneratedRubric.from_raw(item.id, name, raw)
            result.written.append(
                str(run.write_json(f"rubrics/{key}.json", _rubric_doc(rubric, digest)))
            )
    run.write_json("rubrics/failures.json", result.failures)
    return result


def run_alignment(cfg: ExperimentConfig, scorer=None) -> StepResult:
    items, run = _prepare(cfg)
    scorer = scorer or make_scorer(cfg.scorer)
    acfg = cfg.alignment_config()
    result = StepResult()
    for name in cfg.settings:
        for item in items:
            rubric = load_rubric(run, item.id, name)
            report = align(rubric, item, scorer, acfg)
            result.written.append(
                str(run.write_json(f"alignment/{_key(item.id, name)}.json", report.to_dict()))
            )
    return result


def _variant(spec: SettingSpec, item: AssessmentItem, run: RunDir) -> RubricVariant:
    if spec.source == "none":
        return RubricVariant("none")
    if spec.source == "human":
        return RubricVariant.human_of(item)
    rubric = load_rubric(run, item.id, spec.name)
    if not rubric.rules:
        # A completion with no usable rules leaves the grader with nothing to follow.
        return RubricVariant("none")
    return RubricVariant("generated_analytic", tuple(rubric.texts()))


def run_grading(
    cfg: ExperimentConfig, backend: Backend | None = None, cache: ResponseCache | None = None
) -> StepResult:
    items, run = _prepare(cfg)
    specs = cfg.setting_specs()
    params = cfg.params()
    backend = backend or make_backend(cfg.backend, items, cfg.seed)
    if cache is None and cfg.cache:
        cache = ResponseCache(cfg.cache)
    result = StepResult()
    for name in cfg.settings:
        spec = specs[name]
        for item in items:
            key = _key(item.id, name)
            if not item.responses:
                continue
            try:
                variant = _variant(spec, item, run)
            except MissingArtifactError as exc:
                result.failures.append({"item": item.id, "setting": name, "error": str(exc)})
                continue
            sample = sample_balanced(item, cfg.n, cfg.seed)
            try:
                report = grade_item(
                    item, variant, sample, backend, cache, params,
                    workers=cfg.workers,
                    partial_path=run.root / f"grading/{key}.partial.jsonl",
                )
            except GradingAborted as exc:
                run.register(f"grading/{key}.partial.jsonl")
                result.failures.append({"item": item.id, "setting": name, "error": str(exc)})
                continue
            lines = [json.dumps(o.to_dict(), ensure_ascii=False, sort_keys=True) for o in report.outcomes]
            run.write_text(f"grading/{key}.jsonl", "".join(line + "\n" for line in lines))
            result.written.append(str(run.write_json(f"grading/{key}.summary.json", report.summary())))
    run.write_json("grading/failures.json", result.failures)
    return result


# -- aggregation ----------------------------------------------------------------

METRICS = ("rule_count", "precision", "recall", "f1")


def _collect(cfg: ExperimentConfig, items: Sequence[AssessmentItem], run: RunDir) -> dict:
    """Per-(item, setting) values read back from stored artifacts."""
    per_item: dict[str, dict[str, dict]] = {}
    for name in cfg.settings:
        rows = {}
        for item in items:
            key = _key(item.id, name)
            row: dict = {}
            if run.exists(f"alignment/{key}.json"):
                doc = run.read_json(f"alignment/{key}.json")
                row.update({m: doc[m] for m in METRICS})
            if run.exists(f"grading/{key}.summary.json"):
                row["accuracy"] = run.read_json(f"grading/{key}.summary.json")["accuracy"]
            if row:
                rows[item.id] = row
        per_item[name] = rows
    return per_item


def _summaries(per_item: dict) -> dict:
    out = {}
    for name, rows in per_item.items():
        cols = {}
        for col in (*METRICS, "accuracy"):
            values = [row[col] for row in rows.values() if col in row]
            if values:
                cols[col] = asdict(mean_std(values))
        out[name] = cols
    return out


def run_stats(cfg: ExperimentConfig) -> dict:
    items, run = _prepare(cfg)
    per_item = _collect(cfg, items, run)
    summaries = _summaries(per_item)
    usable = [s for s in cfg.settings if "f1" in summaries[s] and "accuracy" in summaries[s]]
    if len(usable) < 3:
        raise ValueError(f"Spearman needs at least 3 settings with F1 and accuracy, got {usable}")
    f1s = [summaries[s]["f1"]["mean"] for s in usable]
    accs = [summaries[s]["accuracy"]["mean"] for s in usable]
    doc: dict = {
        "spearman": {
            "settings": usable,
            "f1": f1s,
            "accuracy": accs,
            **spearman(f1s, accs).to_dict(),
        },
        "ttests": [],
    }
    test = pooled_t_test if cfg.unpaired else paired_t_test
    for a, b in cfg.ttests:
        if a not in per_item or b not in per_item:
            continue
        common = [it.id for it in items if it.id in per_item[a] and it.id in per_item[b]]
        va = [per_item[a][i]["f1"] for i in common]
        vb = [per_item[b][i]["f1"] for i in common]
        if len(common) < 2:
            continue
        res = test(va, vb, cfg.alpha)
        doc["ttests"].append(
            {"a": a, "b": b, "metric": "f1", "paired": not cfg.unpaired, "items": common,
             "a_values": va, "b_values": vb, **res.to_dict()}
        )
    run.write_json("stats/stats.json", doc)
    return doc


def run_annotation(
    cfg: ExperimentConfig,
    setting: str,
    channel: Channel,
    *,
    annotator: str = "annotator",
    only_items: Sequence[str] | None = None,
    reference_setting: str | None = None,
):
    """Annotate the incorrect rules of one setting.

    ``reference_setting`` keeps only items for which that setting produced no
    incorrect rule; ``only_items`` restricts to an explicit id list.
    """
    items, run = _prepare(cfg)
    ids = [it.id for it in items]
    if only_items:
        ids = [i for i in ids if i in set(only_items)]
    if reference_setting:
        ids = [
            i for i in ids
            if not AlignmentReport.from_dict(
                run.read_json(f"alignment/{_key(i, reference_setting)}.json")
            ).incorrect_rules()
        ]
    reports = [
        AlignmentReport.from_dict(run.read_json(f"alignment/{_key(i, setting)}.json")) for i in ids
    ]
    rubrics = [load_rubric(run, i, setting) for i in ids]
    queue = collect_incorrect_rules(reports, rubrics)
    store = run.root / "annotations/annotations.jsonl"
    try:
        return annotate(
            queue, channel, store, annotator=annotator, items={it.id: it for it in items}
        )
    finally:
        if store.exists():
            run.register("annotations/annotations.jsonl")


# -- report ----------------------------------------------------------------------

_COLUMNS = (
    ("rule_count", "#Rules", 2, 1.0),
    ("precision", "Pre.", 3, 1.0),
    ("recall", "Rec.", 3, 1.0),
    ("f1", "F1", 3, 1.0),
    ("accuracy", "Acc. (%)", 2, 100.0),
)


def _cell(summary: dict | None, digits: int, scale: float) -> str:
    if summary is None:
        return "-"
    return SummaryStat(**summary).format(digits, 2, scale)


def _markdown(cfg: ExperimentConfig, specs, summaries, per_item, stats, causes) -> str:
    lines = ["# Rubric alignment and grading report", ""]
    lines.append("| Setting | " + " | ".join(c[1] for c in _COLUMNS) + " |")
    lines.append("|---|" + "---|" * len(_COLUMNS))
    for name in cfg.settings:
        cells = [_cell(summaries[name].get(col), d, s) for col, _, d, s in _COLUMNS]
        lines.append(f"| {specs[name].label} | " + " | ".join(cells) + " |")
    lines.append("")
    lines.append("Values are avg.±std. (population std) over items.")
    lines.append("")
    lines.append("## Per-item values")
    lines.append("")
    lines.append("| Setting | Item | #Rules | Pre. | Rec. | F1 | Acc. (%) |")
    lines.append("|---|---|---|---|---|---|---|")
    for name in cfg.settings:
        for item_id, row in per_item[name].items():
            def fmt(col, d, s):
                return f"{row[col] * s:.{d}f}" if col in row else "-"
            cells = [fmt(col, d, s) for col, _, d, s in _COLUMNS]
            lines.append(f"| {name} | {item_id} | " + " | ".join(cells) + " |")
    if stats:
        sp = stats["spearman"]
        lines += ["", "## Statistics", ""]
        lines.append(
            f"Spearman rank correlation between mean F1 and mean accuracy over "
            f"{sp['n']} settings: rho = {sp['rho']:.4f}, p = {sp['p_value']:.4g}"
        )
        for tt in stats["ttests"]:
            kind = "paired" if tt["paired"] else "pooled"
            verdict = "reject" if tt["reject_at_alpha"] else "do not reject"
            t = tt["t"] if isinstance(tt["t"], str) else f"{tt['t']:.4f}"
            lines.append(
                f"- {kind} t-test on F1, {tt['a']} vs {tt['b']} ({len(tt['items'])} items): "
                f"t = {t}, df = {tt['df']:g}, p = {tt['p_two_tailed']:.4g} "
                f"({verdict} at alpha = {tt['alpha']})"
            )
    if causes:
        lines += ["", "## Error causes", ""]
        lines.append("| Setting | n | " + " | ".join(c.value for c in CAUSES) + " |")
        lines.append("|---|---|" + "---|" * len(CAUSES))
        for dist in causes:
            pct = " | ".join(f"{dist['percentages'][c.name]:.2f}" for c in CAUSES)
            lines.append(f"| {dist['setting']} | {dist['total']} | {pct} |")
    return "\n".join(lines) + "\n"


def build_report(cfg: ExperimentConfig) -> dict:
    """Render report/report.md and report/report.json from stored artifacts only."""
    items, run = _prepare(cfg)
    specs = cfg.setting_specs()
    per_item = _collect(cfg, items, run)
    if not any(per_item.values()):
        raise EmptyRunError(f"no alignment or grading artifacts under {cfg.out}")
    summaries = _summaries(per_item)
    stats = run.read_json("stats/stats.json") if run.exists("stats/stats.json") else None
    causes = []
    ann_path = run.root / "annotations/annotations.jsonl"
    annotations = load_annotations(ann_path)
    for name in sorted({a.setting for a in annotations}):
        causes.append(cause_proportions(annotations, name).to_dict())
    sources = sorted(
        rel for rel in run.manifest()["artifacts"]
        if rel.startswith(("alignment/", "grading/")) and not rel.endswith(("failures.json", ".jsonl"))
    )
    doc = {
        "settings": {name: {"label": specs[name].label, "summary": summaries[name]} for name in cfg.settings},
        "per_item": per_item,
        "statistics": stats,
        "error_causes": causes,
        "provenance": {
            **run.manifest()["provenance"],
            "sources": {rel: run.manifest()["artifacts"][rel] for rel in sources},
        },
    }
    run.write_text("report/report.md", _markdown(cfg, specs, summaries, per_item, stats, causes))
    run.write_json("report/report.json", doc)
    return doc


def run_all(cfg: ExperimentConfig, backend: Backend | None = None, cache: ResponseCache | None = None):
    """All non-interactive steps in order; returns the failures of every step."""
    items = load_items(cfg.items) if cfg.items and Path(cfg.items).is_file() else []
    if backend is None:
        cfg.validate()
        backend = make_backend(cfg.backend, items, cfg.seed)
    if cache is None and cfg.cache:
        cache = ResponseCache(cfg.cache)
    failures = []
    failures += gen_rubrics(cfg, backend, cache).failures
    run_alignment(cfg)
    failures += run_grading(cfg, backend, cache).failures
    if len(cfg.settings) >= 3:
        run_stats(cfg)
    else:
        log.warning("fewer than 3 settings; skipping statistics")
    build_report(cfg)
    return failures


def record_fixture(cfg: ExperimentConfig, backend: Backend, fixture_path: str | Path) -> MockBackend:
    """Run rubric generation and grading through ``backend``, saving every answer as a mock fixture.

    The response cache is bypassed so that every transcript reaches ``backend``.
    """
    cfg = ExperimentConfig.from_dict({**asdict(cfg), "cache": None})
    recorder = RecordingBackend(backend)
    gen_rubrics(cfg, recorder, cache=None)
    run_alignment(cfg)
    run_grading(cfg, recorder, cache=None)
    recorder.sink.save(fixture_path)
    return recorder.sink
