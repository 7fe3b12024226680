"""Iterative intervention-feedback loop for dialogue structure queries.

One iteration: ask the oracle for all pairwise causal judgments (Step 1),
then for every bivariate view row-zero the parsed structure and re-query
the dialogue with the believed parents of the intervened utterances
deleted (Step 2), and finally turn every disagreement between the two
intervened matrices into a natural-language feedback clause appended to
the next prompt (Step 3). The loop stops when no view disagrees or the
iteration budget is exhausted. Label supervision skips Step 2 and draws
conflicts from the ground truth directly.

Conflicts are collected only over utterance pairs retained in the reduced
dialogue; entries lifted from deleted utterances default to 0 but carry
no evidence, and comparing them would flag every believed parent edge as
a spurious conflict.
"""

from __future__ import annotations

import math
import os
import re
import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    AmbiguousAnswer,
    DegenerateDialogue,
    MissingAnswer,
    OracleFailure,
)
from .graph import (
    CausalStructure,
    InterventionView,
    admissible_indices,
    enumerate_interventions,
    validate_structure,
)
from .metrics import f1

ROLE_TEXT = (
    "You are assuming the role of a researcher capable of distinguishing "
    "between causation and correlation, charged with the task of recognizing "
    "the causal relationships among individual utterances within a given "
    "dialogue. We prescribe that the judgment of causation between two "
    "utterances is based on whether the former is the intended target of the "
    "latter's response. Whereas, correlation is gauged on whether the two "
    "share similar topics or vocabulary. The following is an example:"
)

DEMO_UTTERANCES = (
    "Hazel drank too much champagne at the party.",
    "Oh my goodness! That sounds like quite an eventful party.",
    "Well, drinking too much alcohol can have many negative effects.",
    "Oh no, I can imagine Hazel waking up with a massive headache tomorrow.",
)

# lexicographic pair order: (1,2),(1,3),(1,4),(2,3),(2,4),(3,4)
DEMO_ANSWERS = ("Yes", "Yes", "Yes", "No", "No", "Yes")

TARGET_MARKER = (
    "Given the above example, with its associated questions and answers, "
    "consider the following dialogue:"
)

FEEDBACK_PREFIX = "After intervention, "
FEEDBACK_SUFFIX = " Please re-answer based on these circumstances."

_ORDINALS = (
    "first", "second", "third", "fourth", "fifth",
    "sixth", "seventh", "eighth", "ninth", "tenth",
)


def ordinal(n: int) -> str:
    return _ORDINALS[n - 1] if 1 <= n <= len(_ORDINALS) else f"{n}th"


def _ordinal_to_int(word: str) -> int:
    if word in _ORDINALS:
        return _ORDINALS.index(word) + 1
    return int(word.rstrip("th"))


@dataclass(frozen=True)
class Dialogue:
    utterances: tuple[str, ...]
    truth: CausalStructure | None = None

    def __post_init__(self):
        object.__setattr__(self, "utterances", tuple(self.utterances))
        if len(self.utterances) < 2:
            raise ValueError("a dialogue needs at least 2 utterances")
        if self.truth is not None and self.truth.n_vars != len(self.utterances):
            raise ValueError("truth size does not match utterance count")

    @property
    def n_vars(self) -> int:
        return len(self.utterances)


def lexicographic_pairs(n: int) -> list[tuple[int, int]]:
    """Ordered (earlier, later) pairs, 1-based: (1,2),(1,3),...,(n-1,n)."""
    return [(i, j) for i in range(1, n) for j in range(i + 1, n + 1)]


def _dialogue_block(utterances) -> str:
    lines = [f"{k}. {text}" for k, text in enumerate(utterances, start=1)]
    return "Dialogue:\n'" + "\n".join(lines) + "'"


def _question(k: int, i: int, j: int) -> str:
    return f"Question {k}: Is there a causal relationship from utterance {i} to utterance {j}?"


def build_initial_prompt(d: Dialogue) -> str:
    """The Step-1 instruction: role, worked example, target questions."""
    parts = [ROLE_TEXT, "", _dialogue_block(DEMO_UTTERANCES), ""]
    for k, (i, j) in enumerate(lexicographic_pairs(len(DEMO_UTTERANCES)), start=1):
        parts.append(_question(k, i, j))
        parts.append(f"Answer {k}: {DEMO_ANSWERS[k - 1]}.")
    parts += ["", TARGET_MARKER, "", _dialogue_block(d.utterances), ""]
    for k, (i, j) in enumerate(lexicographic_pairs(d.n_vars), start=1):
        parts.append(_question(k, i, j))
    return "\n".join(parts)


def render_answers(bits) -> str:
    """Answer lines in the format parse_answers expects (round-trip aid)."""
    return "\n".join(
        f"Answer {k}: {'Yes' if b else 'No'}." for k, b in enumerate(bits, start=1)
    )


def parse_answers(text: str, n_vars: int) -> CausalStructure:
    """Extract C(n,2) yes/no answers into a binary structure.

    Answer k addresses the k-th lexicographic pair (i, j); "yes" sets the
    edge i -> j (stored at entry (j, i)). Matching is case-insensitive and
    the first yes/no token after the "Answer k" marker wins.
    """
    pairs = lexicographic_pairs(n_vars)
    markers = [
        (m.start(), m.end(), int(m.group(1)))
        for m in re.finditer(r"(?i)\banswer\s*(\d+)\s*[:.]", text)
    ]
    adj = np.zeros((n_vars, n_vars), dtype=np.int64)
    for k, (i, j) in enumerate(pairs, start=1):
        hits = [m for m in markers if m[2] == k]
        if not hits:
            raise MissingAnswer(k)
        start = hits[0][1]
        later = [m[0] for m in markers if m[0] > start]
        segment = text[start : min(later)] if later else text[start:]
        token = re.search(r"(?i)\b(yes|no)\b", segment)
        if token is None:
            raise AmbiguousAnswer(k)
        if token.group(1).lower() == "yes":
            adj[j - 1, i - 1] = 1
    return validate_structure(adj)


def intervene_dialogue(d: Dialogue, a_s: CausalStructure, view: InterventionView):
    """Delete believed parents of the view's targets; targets stay.

    Returns (reduced dialogue, index map) where index_map[r-1] is the
    original 1-based index of reduced utterance r.
    """
    n = d.n_vars
    targets = set(view.targets)
    deleted = set()
    for t in view.targets:
        parents = {c + 1 for c in np.nonzero(a_s.adj[t - 1])[0]}
        deleted |= parents
    deleted -= targets
    index_map = [i for i in range(1, n + 1) if i not in deleted]
    if len(index_map) < 2:
        raise DegenerateDialogue(f"view {view.targets} leaves {len(index_map)} utterances")
    reduced = Dialogue(tuple(d.utterances[i - 1] for i in index_map))
    return reduced, index_map


def build_feedback(conflicts) -> str:
    """Step-3 instruction from (cause, effect, direction) conflicts.

    direction "drop": the structure asserts an edge the intervened
    re-query rejects; "add" is the converse. The common-cause clause is
    omitted when the cause is the first utterance.
    """
    if not conflicts:
        return ""
    clauses = []
    for i, j, direction in conflicts:
        oi, oj = ordinal(i), ordinal(j)
        if direction == "drop":
            cc = f"there should be no common cause between the {oi} utterance and the {oj} utterance"
            rel = f"the {oi} utterance should not have a causal relationship with the {oj} utterance"
        else:
            cc = f"there should be a common cause between the {oi} utterance and the {oj} utterance"
            rel = f"the {oi} utterance should have a causal relationship with the {oj} utterance"
        clauses.append(rel if i == 1 else f"{cc}, and {rel}")
    return FEEDBACK_PREFIX + ", and ".join(clauses) + "." + FEEDBACK_SUFFIX


_FEEDBACK_CLAUSE = re.compile(
    r"the (\w+) utterance should (not )?have a causal relationship with the (\w+) utterance"
)


def parse_feedback(text: str):
    """Inverse of build_feedback: [(cause, effect, direction), ...]."""
    out = []
    for cause_w, neg, effect_w in _FEEDBACK_CLAUSE.findall(text):
        direction = "drop" if neg else "add"
        out.append((_ordinal_to_int(cause_w), _ordinal_to_int(effect_w), direction))
    return out


# ---------------------------------------------------------------------------
# oracles


@dataclass(frozen=True)
class MockOracleConfig:
    hidden_truth: CausalStructure
    flip_prob: float = 0.0
    correction_prob: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.flip_prob <= 1.0 and 0.0 <= self.correction_prob <= 1.0):
            raise ValueError("probabilities must lie in [0,1]")


class MockOracle:
    """Offline oracle with an internal belief about one dialogue.

    The belief starts as the hidden truth with each admissible edge
    flipped independently with probability flip_prob. Full-dialogue
    queries are answered from the belief; reduced-dialogue (Step 2)
    queries are answered from the hidden truth restricted to the retained
    utterances. Feedback clauses flip their flagged edge toward the
    instruction with probability correction_prob; unflagged edges never
    change.
    """

    uses_label_feedback = False

    def __init__(self, dialogue: Dialogue, config: MockOracleConfig):
        if config.hidden_truth.n_vars != dialogue.n_vars:
            raise ValueError("hidden truth size does not match dialogue")
        self.dialogue = dialogue
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self._index = {text: k + 1 for k, text in enumerate(dialogue.utterances)}
        truth = config.hidden_truth.adj
        belief = truth.copy()
        eff, cau = admissible_indices(dialogue.n_vars)
        flips = self.rng.random(len(eff)) < config.flip_prob
        belief[eff[flips], cau[flips]] ^= 1
        self.belief = belief
        self.truth = truth

    def flipped_edges(self) -> int:
        return int(np.count_nonzero(self.belief != self.truth))

    def _apply_feedback(self, prompt: str) -> None:
        for i, j, direction in parse_feedback(prompt):
            if self.rng.random() < self.config.correction_prob:
                self.belief[j - 1, i - 1] = 0 if direction == "drop" else 1

    def _target_lines(self, prompt: str):
        if TARGET_MARKER not in prompt:
            raise ValueError("prompt lacks the target dialogue marker")
        segment = prompt.split(TARGET_MARKER, 1)[1]
        lines = []
        for raw in segment.splitlines():
            line = raw.strip().strip("'")
            m = re.match(r"^(\d+)\.\s*(.*)$", line)
            if m:
                lines.append(m.group(2).strip())
            elif line.startswith("Question"):
                break
        return lines

    def complete(self, prompt: str) -> str:
        if FEEDBACK_PREFIX.strip() in prompt:
            self._apply_feedback(prompt)
        texts = self._target_lines(prompt)
        original = [self._index[t] for t in texts]
        matrix = self.belief if len(texts) == self.dialogue.n_vars else self.truth
        bits = []
        for ri, rj in lexicographic_pairs(len(texts)):
            oi, oj = original[ri - 1], original[rj - 1]
            bits.append(int(matrix[oj - 1, oi - 1]))
        return render_answers(bits)


class LabelOracle(MockOracle):
    """Mock oracle whose loop skips Step 2; feedback comes from labels."""

    uses_label_feedback = True


class HttpOracle:
    """Single-endpoint JSON oracle: POST {"prompt": ...} -> {"text": ...}.

    Endpoint and bearer token come from LLM_ENDPOINT / LLM_API_KEY unless
    given explicitly. Transport errors retry 3 times with exponential
    backoff starting at 1 second.
    """

    uses_label_feedback = False

    def __init__(self, endpoint=None, api_key=None, timeout=60.0, sleeper=time.sleep):
        self.endpoint = endpoint or os.environ.get("LLM_ENDPOINT")
        if not self.endpoint:
            raise ValueError("no endpoint: pass one or set LLM_ENDPOINT")
        self.api_key = api_key if api_key is not None else os.environ.get("LLM_API_KEY")
        self.timeout = timeout
        self.sleeper = sleeper

    def complete(self, prompt: str) -> str:
        import requests

        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last = None
        for attempt in range(3):
            try:
                resp = requests.post(
                    self.endpoint,
                    json={"prompt": prompt},
                    headers=headers,
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                return str(resp.json()["text"])
            except (requests.RequestException, KeyError, ValueError) as exc:
                last = exc
                if attempt < 2:
                    self.sleeper(1.0 * 2**attempt)
        raise OracleFailure(f"http oracle failed after 3 attempts: {last}")


# ---------------------------------------------------------------------------
# the loop


def _ask(oracle, prompt: str, n_vars: int, trace) -> CausalStructure:
    last = None
    for _ in range(3):
        try:
            return parse_answers(oracle.complete(prompt), n_vars)
        except OracleFailure as exc:
            raise OracleFailure(str(exc), partial_trace=trace) from exc
        except (MissingAnswer, AmbiguousAnswer) as exc:
            last = exc
    raise OracleFailure(f"unparseable oracle output after 3 attempts: {last}", trace)


def _lift(parsed: CausalStructure, index_map, n: int) -> np.ndarray:
    lifted = np.zeros((n, n), dtype=np.int64)
    for ri, rj in lexicographic_pairs(len(index_map)):
        oi, oj = index_map[ri - 1], index_map[rj - 1]
        lifted[oj - 1, oi - 1] = parsed.adj[rj - 1, ri - 1]
    return lifted


def _zero_rows(adj: np.ndarray, view: InterventionView) -> np.ndarray:
    out = adj.copy()
    for t in view.targets:
        out[t - 1, :] = 0
    return out


def run_loop(
    d: Dialogue,
    oracle,
    max_iters: int = 8,
    arity: int = 2,
    step2_oracle=None,
    supervision: str | None = None,
):
    """Iterate Steps 1-3 until every view agrees or the budget runs out.

    supervision "label" compares the intervened structure against the
    dialogue's truth (Step 2 skipped); "model" re-queries reduced
    dialogues. Default follows the oracle's uses_label_feedback flag.
    Returns (final structure, trace); each trace record carries the
    parsed structure, the per-view intervened matrices, the conflicts,
    and the F1 against truth when truth is known.
    """
    n = d.n_vars
    if supervision is None:
        supervision = "label" if getattr(oracle, "uses_label_feedback", False) else "model"
    if supervision == "label" and d.truth is None:
        raise ValueError("label supervision needs the dialogue's truth")
    views = enumerate_interventions(n, min(arity, n))
    base_prompt = build_initial_prompt(d)
    trace: list[dict] = []
    feedback = ""
    a_s = None

    for iteration in range(1, max_iters + 2):
        prompt = base_prompt + ("\n\n" + feedback if feedback else "")
        a_s = _ask(oracle, prompt, n, trace)
        record = {
            "iteration": iteration,
            "a_s": a_s.to_json_dict(),
            "f1": None if d.truth is None else f1(a_s, d.truth),
            "views": {},
            "skipped_views": [],
            "conflicts": [],
        }
        trace.append(record)
        if iteration > max_iters:
            break

        # per-iteration view sets start empty and are rebuilt from scratch
        conflicts: dict[tuple[int, int], str] = {}
        for view in views:
            s_do = _zero_rows(a_s.adj, view)
            if supervision == "label":
                t_do = _zero_rows(d.truth.adj, view)
                record["views"][view.key()] = {"s_do": s_do.tolist()}
                diff = np.argwhere(s_do != t_do)
                for e, c in diff:
                    pair = (int(c) + 1, int(e) + 1)
                    direction = "drop" if s_do[e, c] == 1 else "add"
                    conflicts.setdefault(pair, direction)
                continue
            try:
                reduced, index_map = intervene_dialogue(d, a_s, view)
            except DegenerateDialogue:
                record["skipped_views"].append(view.key())
                continue
            parsed = _ask(
                step2_oracle or oracle, build_initial_prompt(reduced), reduced.n_vars, trace
            )
            r_do = _lift(parsed, index_map, n)
            record["views"][view.key()] = {"s_do": s_do.tolist(), "r_do": r_do.tolist()}
            retained = set(index_map)
            for i, j in lexicographic_pairs(n):
                if i not in retained or j not in retained:
                    continue
                s_bit, r_bit = int(s_do[j - 1, i - 1]), int(r_do[j - 1, i - 1])
                if s_bit == 1 and r_bit == 0:
                    conflicts.setdefault((i, j), "drop")
                elif s_bit == 0 and r_bit == 1:
                    conflicts.setdefault((i, j), "add")

        conflict_list = [(i, j, direction) for (i, j), direction in sorted(conflicts.items())]
        record["conflicts"] = [[i, j, direction] for i, j, direction in conflict_list]
        if not conflict_list:
            break
        feedback = build_feedback(conflict_list)

    return a_s, trace


def make_synthetic_dialogue(truth: CausalStructure, tag: int = 0) -> Dialogue:
    """Placeholder dialogue with unique utterance texts for mock runs."""
    utterances = tuple(
        f"Utterance {k} of synthetic dialogue {tag}."
        for k in range(1, truth.n_vars + 1)
    )
    return Dialogue(utterances=utterances, truth=truth)


def dialogue_to_json_dict(d: Dialogue) -> dict:
    doc: dict = {"utterances": list(d.utterances)}
    if d.truth is not None:
        doc["truth"] = d.truth.to_json_dict()
    return doc


def dialogue_from_json_dict(doc: dict) -> Dialogue:
    truth = None
    if doc.get("truth") is not None:
        truth = CausalStructure.from_json_dict(doc["truth"])
    return Dialogue(utterances=tuple(doc["utterances"]), truth=truth)
