"""Scenario orchestration, outcome matrix, and structured transcript output."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import adversary, wire
from .adversary import (
    AttackFailed,
    TranscriptEvent,
    capture,
    collect_auts_differentials,
    replay_to,
    substitute_suci,
)
from .messages import (
    AuthOutcome,
    AuthenticationFailure,
    AuthenticationResponse,
    FailureCause,
    UniformEnvelope,
)
from .variants import VariantMode
from .world import World

logger = logging.getLogger(__name__)

SCENARIOS = (
    "normal",
    "replay-auth-same",
    "replay-auth-diff",
    "replay-suci-same",
    "replay-suci-diff",
    "auts-attack",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """One deterministic experiment: variant, scripted scenario, seed."""

    variant: VariantMode
    scenario: str
    seed: int
    subscribers: int = 4
    window: int = 32
    gaps: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        if self.subscribers < 1:
            raise ConfigError("subscribers must be >= 1")
        if self.scenario.endswith("-diff") and self.subscribers < 2:
            raise ConfigError(f"{self.scenario} needs at least 2 subscribers")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        if any(g < 0 for g in self.gaps):
            raise ConfigError("gaps must be non-negative")

    @classmethod
    def from_mapping(cls, data: dict) -> "ScenarioConfig":
        """Build from kebab-case keys as used by the TOML config file."""
        known = {"variant", "scenario", "seed", "subscribers", "window", "gaps"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(
                variant=VariantMode.from_string(data["variant"]),
                scenario=data["scenario"],
                seed=int(data.get("seed", 0)),
                subscribers=int(data.get("subscribers", 4)),
                window=int(data.get("window", 32)),
                gaps=tuple(int(g) for g in data.get("gaps", ())),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key: {exc.args[0]}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class OutcomeRow:
    scenario: str
    variant: str
    outcome: AuthOutcome
    verdict: str | None = None


def outcome_from_frame(frame: bytes) -> AuthOutcome:
    """Classify an observed reply frame the way the outcome table does."""
    msg = wire.decode_message(frame)
    if isinstance(msg, AuthenticationResponse):
        return AuthOutcome.OK
    if isinstance(msg, AuthenticationFailure):
        if msg.cause is FailureCause.MAC_FAILURE:
            return AuthOutcome.MAC_FAILURE
        return AuthOutcome.SYNCH_FAILURE
    if isinstance(msg, UniformEnvelope):
        return AuthOutcome.UNIFORM_REJECT
    raise ValueError(f"frame is not a reply: {adversary.summarize_message(msg)}")


def run_scenario(cfg: ScenarioConfig) -> tuple[list[TranscriptEvent], OutcomeRow]:
    """Execute one scripted scenario; bit-reproducible for a fixed seed."""
    world = World(
        variant=cfg.variant,
        subscribers=cfg.subscribers,
        window=cfg.window,
        seed=cfg.seed,
    )
    label = cfg.scenario
    verdict: str | None = None

    if cfg.scenario == "normal":
        outcome = world.authenticate(0)

    elif cfg.scenario in ("replay-auth-same", "replay-auth-diff"):
        probe = 0 if cfg.scenario.endswith("same") else 1
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_AUTH_REQUEST)
        reply = replay_to(world, captured, probe)
        outcome = outcome_from_frame(reply.frame)
        verdict = adversary._verdict_from_failure_reply(reply).value

    elif cfg.scenario in ("replay-suci-same", "replay-suci-diff"):
        gap = cfg.gaps[0] if cfg.gaps else 0
        probe = 0 if cfg.scenario.endswith("same") else 1
        if cfg.scenario == "replay-suci-same":
            label += ":out-of-window" if gap >= cfg.window else ":in-window"
        world.authenticate(0)
        captured = capture(world.tap, wire.TAG_REGISTRATION)
        world.burn_vectors(0, gap)
        substitute_suci(world.tap, captured)
        probe_start = len(world.tap.events)
        outcome = world.authenticate(probe)
        decisive = adversary._decisive_reply(world.tap, probe_start)
        verdict = adversary._verdict_from_reply_type(decisive, world.variant).value

    elif cfg.scenario == "auts-attack":
        gaps = list(cfg.gaps) if cfg.gaps else [1]
        try:
            samples = collect_auts_differentials(world, 0, gaps)
            outcome = AuthOutcome.SYNCH_FAILURE
            verdict = "differentials=" + ";".join(f"{d.hex()}@{g}" for d, g in samples)
        except AttackFailed:
            outcome = outcome_from_frame(world.tap.frames()[-1].frame)
            verdict = "attack-failed"

    else:  # pragma: no cover - guarded by ScenarioConfig
        raise ConfigError(f"unhandled scenario {cfg.scenario}")

    assert outcome is not None
    row = OutcomeRow(
        scenario=label, variant=cfg.variant.value, outcome=outcome, verdict=verdict
    )
    return list(world.tap.events), row


# Matrix row shapes: (row label, scenario id, gaps given the window size).
_MATRIX_ROWS = (
    ("normal", "normal", lambda w: ()),
    ("replay-auth-same", "replay-auth-same", lambda w: ()),
    ("replay-auth-diff", "replay-auth-diff", lambda w: ()),
    ("replay-suci-same:in-window", "replay-suci-same", lambda w: (0,)),
    ("replay-suci-same:out-of-window", "replay-suci-same", lambda w: (w,)),
    ("replay-suci-diff", "replay-suci-diff", lambda w: ()),
)

# Reference outcomes for the two headline variants; `aka matrix` exits
# non-zero when a computed cell disagrees.
EXPECTED_MATRIX: dict[tuple[str, str], AuthOutcome] = {
    ("normal", "baseline"): AuthOutcome.OK,
    ("replay-auth-same", "baseline"): AuthOutcome.SYNCH_FAILURE,
    ("replay-auth-diff", "baseline"): AuthOutcome.MAC_FAILURE,
    ("replay-suci-same:in-window", "baseline"): AuthOutcome.OK,
    ("replay-suci-same:out-of-window", "baseline"): AuthOutcome.SYNCH_FAILURE,
    ("replay-suci-diff", "baseline"): AuthOutcome.MAC_FAILURE,
    ("normal", "nonce-in-suci"): AuthOutcome.OK,
    ("replay-auth-same", "nonce-in-suci"): AuthOutcome.UNIFORM_REJECT,
    ("replay-auth-diff", "nonce-in-suci"): AuthOutcome.UNIFORM_REJECT,
    ("replay-suci-same:in-window", "nonce-in-suci"): AuthOutcome.UNIFORM_REJECT,
    ("replay-suci-same:out-of-window", "nonce-in-suci"): AuthOutcome.UNIFORM_REJECT,
    ("replay-suci-diff", "nonce-in-suci"): AuthOutcome.UNIFORM_REJECT,
}


def run_matrix(
    variants: list[VariantMode],
    seed: int = 0,
    window: int = 32,
    subscribers: int = 4,
) -> list[OutcomeRow]:
    """Run the replay-outcome grid: five scenarios (six rows) per variant."""
    rows: list[OutcomeRow] = []
    for v_index, variant in enumerate(variants):
        for r_index, (_, scenario, gaps_for) in enumerate(_MATRIX_ROWS):
            cfg = ScenarioConfig(
                variant=variant,
                scenario=scenario,
                seed=seed + 100 * v_index + r_index,
                subscribers=subscribers,
                window=window,
                gaps=gaps_for(window),
            )
            _, row = run_scenario(cfg)
            rows.append(row)
    return rows


@dataclass
class MatrixReport:
    rows: list[OutcomeRow]
    text: str
    missing: list[tuple[str, str]] = field(default_factory=list)
    mismatches: list[str] = field(default_factory=list)


def emit_outcome_matrix(rows: list[OutcomeRow], out_dir: str | Path | None = None) -> MatrixReport:
    """Render rows as an aligned table, check coverage, and write CSV output."""
    if not rows:
        logger.warning("empty outcome matrix: no rows to render")
    variants = []
    for row in rows:
        if row.variant not in variants:
            variants.append(row.variant)
    present = {(row.scenario, row.variant) for row in rows}
    missing = [
        (label, variant)
        for variant in variants
        for (label, _, _) in _MATRIX_ROWS
        if (label, variant) not in present
    ]
    if missing:
        logger.warning("partial matrix: %d missing cells: %s", len(missing), missing)

    mismatches = []
    for row in rows:
        expected = EXPECTED_MATRIX.get((row.scenario, row.variant))
        if expected is not None and expected is not row.outcome:
            mismatches.append(
                f"{row.scenario}/{row.variant}: got {row.outcome.value}, expected {expected.value}"
            )

    headers = ("scenario", "variant", "outcome", "verdict")
    table = [headers] + [
        (row.scenario, row.variant, row.outcome.value, row.verdict or "-") for row in rows
    ]
    widths = [max(len(line[col]) for line in table) for col in range(len(headers))]
    lines = []
    for i, line in enumerate(table):
        lines.append("  ".join(cell.ljust(widths[col]) for col, cell in enumerate(line)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[col] for col in range(len(headers))))
    text = "\n".join(lines)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "matrix.txt").write_text(text + "\n", encoding="utf-8")
        with (out / "matrix.csv").open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(headers)
            for row in rows:
                writer.writerow([row.scenario, row.variant, row.outcome.value, row.verdict or ""])

    return MatrixReport(rows=rows, text=text, missing=missing, mismatches=mismatches)


def write_transcript(events: list[TranscriptEvent], path: str | Path) -> None:
    """One JSON object per line; enough to replay and diff runs exactly."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for event in events:
            fh.write(
                json.dumps(
                    {
                        "seq": event.seq,
                        "direction": event.direction,
                        "tag": event.tag,
                        "length": event.length,
                        "frame_hex": event.frame.hex(),
                        "summary": event.summary,
                        "adversarial": event.adversarial,
                    }
                )
                + "\n"
            )


def read_transcript(path: str | Path) -> list[TranscriptEvent]:
    events = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            record = json.loads(line)
            events.append(
                TranscriptEvent(
                    seq=record["seq"],
                    direction=record["direction"],
                    tag=record["tag"],
                    length=record["length"],
                    frame=bytes.fromhex(record["frame_hex"]),
                    summary=record["summary"],
                    adversarial=record["adversarial"],
                )
            )
    return events
