"""Synthetic language: descriptions, instructions, log phrases, and parsing.

All text is lowercase and period-terminated. Canonical task text is the goal
sentence followed by the constraint sentences (penalties first). The parser is
the inverse of the describer over the whole task universe, and additionally
accepts the log-style constraint clause ("stepping on the lava and avoiding the
field") and a few article variants seen in transcripts.

Per-leg instructions take the form "go to <loc> and <phrase>." where <loc> is
the target cell descriptor: an object kind, a terrain, "empty cell", or a
landmark ("the" prefixes fixtures). Constraint reminders are appended as
sentences without articles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import ParseError
from .graph import WorldGraph
from .tasks import Atom, ConstraintSet, EndGoal, Task

# qualifier kinds for plan legs / log phrases
Q_EMPTY = "empty"     # acts on a bare cell ("on empty cell")
Q_DEST = "dest"       # acts on a destination terrain ("on water")
Q_COVER = "cover"     # covering leg ("covering water")


@dataclass(frozen=True)
class Qualifier:
    kind: str
    terrain: Optional[str] = None

    def log_suffix(self) -> str:
        if self.kind == Q_EMPTY:
            return " on empty cell"
        if self.kind == Q_DEST:
            return f" on {self.terrain}"
        return f" covering {self.terrain}"


def describe_task(graph: WorldGraph, task: Task) -> str:
    return task.text(graph)


def describe_goal(graph: WorldGraph, goal: EndGoal) -> str:
    return goal.sentence(graph)


# -- description parsing ----------------------------------------------------------


def _split_sentences(text: str) -> list[str]:
    parts = [p.strip() for p in text.strip().split(".")]
    if parts and parts[-1] == "":
        parts.pop()
    if not parts or any(p == "" for p in parts):
        raise ParseError(f"bad sentence structure: {text!r}")
    return parts


def _strip_article(text: str) -> str:
    return text[4:] if text.startswith("the ") else text


def _parse_atom(graph: WorldGraph, body: str) -> Atom:
    if body.startswith("clear all of "):
        rest = body[len("clear all of "):]
        plural_to_kind = {v: k for k, v in graph.clear_names.items()}
        kinds = []
        for part in rest.split(" and "):
            name = _strip_article(part)
            if name not in plural_to_kind:
                raise ParseError(f"unknown clear target {name!r}")
            kinds.append(plural_to_kind[name])
        kinds.sort()
        if not 1 <= len(kinds) <= 2 or len(set(kinds)) != len(kinds):
            raise ParseError(f"bad clear goal: {body!r}")
        return Atom("clear", kinds=tuple(kinds))
    if " covering all the " in body:
        phrase, target = body.split(" covering all the ", 1)
        st = graph.subtasks.get(phrase)
        if st is None or st.kind != "terrain" or target not in graph.natural_terrains:
            raise ParseError(f"bad cover goal: {body!r}")
        return Atom("cover", subtask=phrase, target=target)
    if " on " in body:
        phrase, dest = body.rsplit(" on ", 1)
        st = graph.subtasks.get(phrase)
        if st is None or dest not in graph.terrains:
            raise ParseError(f"bad destination goal: {body!r}")
        return Atom("build_on", subtask=phrase, dest=dest)
    st = graph.subtasks.get(body)
    if st is None or not st.goal:
        raise ParseError(f"unknown subtask {body!r}")
    return Atom("subtask", subtask=body)


def _parse_goal_sentence(graph: WorldGraph, sentence: str) -> EndGoal:
    landmark = None
    if sentence.startswith("reach the "):
        lm = sentence[len("reach the "):]
        if lm not in graph.landmarks:
            raise ParseError(f"unknown landmark {lm!r}")
        return EndGoal(atoms=(), landmark=lm)
    if ", then reach the " in sentence:
        sentence, lm = sentence.rsplit(", then reach the ", 1)
        if lm not in graph.landmarks:
            raise ParseError(f"unknown landmark {lm!r}")
        landmark = lm
    if sentence.endswith(" in any order"):
        body = sentence[: -len(" in any order")]
        if landmark is not None:
            raise ParseError("conjunction cannot carry a navigation tail")
        halves = body.split(" and ")
        if len(halves) != 2:
            raise ParseError(f"bad conjunction: {body!r}")
        return EndGoal(atoms=(_parse_atom(graph, halves[0]),
                              _parse_atom(graph, halves[1])))
    return EndGoal(atoms=(_parse_atom(graph, sentence),), landmark=landmark)


def _parse_constraint_sentence(graph: WorldGraph, sentence: str,
                               rewards: set[str], penalties: set[str]) -> None:
    if sentence.startswith("avoid walking on "):
        t = _strip_article(sentence[len("avoid walking on "):])
        _require_natural(graph, t)
        penalties.add(t)
        return
    if sentence.startswith("walking on ") and sentence.endswith(" will reward you"):
        t = _strip_article(sentence[len("walking on "): -len(" will reward you")])
        _require_natural(graph, t)
        rewards.add(t)
        return
    # log-style clause: "stepping on the lava and avoiding the field"
    for part in sentence.split(" and "):
        if part.startswith("stepping on "):
            t = _strip_article(part[len("stepping on "):])
            _require_natural(graph, t)
            rewards.add(t)
        elif part.startswith("avoiding "):
            t = _strip_article(part[len("avoiding "):])
            _require_natural(graph, t)
            penalties.add(t)
        else:
            raise ParseError(f"bad constraint sentence: {sentence!r}")


def _require_natural(graph: WorldGraph, terrain: str) -> None:
    if terrain not in graph.natural_terrains:
        raise ParseError(f"not a natural terrain: {terrain!r}")


def parse_description(graph: WorldGraph, text: str) -> Task:
    """Parse a full task description back into a Task."""
    sentences = _split_sentences(text)
    goal = _parse_goal_sentence(graph, sentences[0])
    rewards: set[str] = set()
    penalties: set[str] = set()
    for s in sentences[1:]:
        _parse_constraint_sentence(graph, s, rewards, penalties)
    if rewards & penalties:
        raise ParseError("terrain cannot both reward and penalize")
    order = {t: i for i, t in enumerate(graph.natural_terrains)}
    cs = ConstraintSet(
        rewards=tuple(sorted(rewards, key=order.get)),
        penalties=tuple(sorted(penalties, key=order.get)),
    )
    return Task(goal=goal, constraints=cs)


# -- per-leg instructions -----------------------------------------------------------


def _loc_text(graph: WorldGraph, loc: str) -> str:
    return f"the {loc}" if loc in graph.fixtures else loc


def leg_location(graph: WorldGraph, subtask: str,
                 qualifier: Optional[Qualifier]) -> str:
    """The target descriptor for a plan leg."""
    st = graph.subtasks[subtask]
    if st.kind == "goto":
        return st.at
    if st.at is not None:
        return st.at
    if qualifier is None or qualifier.kind == Q_EMPTY:
        return "empty cell"
    return qualifier.terrain


def instruction_text(graph: WorldGraph, subtask: str, qualifier: Optional[Qualifier],
                     constraints: ConstraintSet) -> str:
    st = graph.subtasks[subtask]
    if st.kind == "goto":
        head = f"go to the {st.at}."
    else:
        head = f"go to {_loc_text(graph, leg_location(graph, subtask, qualifier))} and {subtask}."
    tail = [f" avoid walking on {t}." for t in constraints.penalties]
    tail += [f" walking on {t} will reward you." for t in constraints.rewards]
    return head + "".join(tail)


def parse_instruction(graph: WorldGraph, text: str) -> tuple[str, Optional[str], ConstraintSet]:
    """Parse a per-leg instruction into (subtask, location, constraints)."""
    sentences = _split_sentences(text)
    head = sentences[0]
    if not head.startswith("go to "):
        raise ParseError(f"bad instruction: {text!r}")
    rest = head[len("go to "):]
    if " and " in rest:
        loc, phrase = rest.split(" and ", 1)
        loc = _strip_article(loc)
        st = graph.subtasks.get(phrase)
        if st is None or st.kind == "goto":
            raise ParseError(f"unknown subtask phrase {phrase!r}")
        subtask, location = phrase, loc
    else:
        lm = _strip_article(rest)
        if lm not in graph.landmarks:
            raise ParseError(f"unknown landmark {lm!r}")
        subtask, location = graph.goto_subtask(lm), lm
    rewards: set[str] = set()
    penalties: set[str] = set()
    for s in sentences[1:]:
        _parse_constraint_sentence(graph, s, rewards, penalties)
    order = {t: i for i, t in enumerate(graph.natural_terrains)}
    cs = ConstraintSet(
        rewards=tuple(sorted(rewards, key=order.get)),
        penalties=tuple(sorted(penalties, key=order.get)),
    )
    return subtask, location, cs


# -- oracle log phrases ---------------------------------------------------------------


def log_phrase(graph: WorldGraph, subtask: str, qualifier: Optional[Qualifier],
               constraints: ConstraintSet, moved: bool) -> str:
    """Transcript label for one plan leg.

    The constraint clause (rewards first) is attached only when the leg
    involved movement; acting in place prints the bare phrase.
    """
    st = graph.subtasks[subtask]
    text = st.id if st.kind != "goto" else f"go to {st.at}"
    if qualifier is not None and st.kind != "goto":
        text += qualifier.log_suffix()
    if moved:
        parts = [f"stepping on the {t}" for t in constraints.rewards]
        parts += [f"avoiding the {t}" for t in constraints.penalties]
        if parts:
            text += ", " + " and ".join(parts)
    return text


# -- exact match ------------------------------------------------------------------------


def _norm(text: str) -> str:
    return " ".join(text.strip().split())


def exact_match(pred: str, gold: str) -> bool:
    return _norm(pred) == _norm(gold)


def goal_sentence_of(text: str) -> str:
    return _split_sentences(text)[0] + "."


def em_description(pred: str, gold: str) -> dict[str, bool]:
    """Full-text and goal-sentence exact match for a predicted description."""
    out = {"full": exact_match(pred, gold)}
    try:
        out["goal"] = exact_match(goal_sentence_of(pred), goal_sentence_of(gold))
    except ParseError:
        out["goal"] = False
    return out


def em_instructions(pred: Sequence[str], gold: Sequence[str]) -> dict[str, bool]:
    """All-legs and final-leg exact match for predicted instruction sequences."""
    all_ok = len(pred) == len(gold) and all(
        exact_match(p, g) for p, g in zip(pred, gold))
    last_ok = bool(pred) and bool(gold) and exact_match(pred[-1], gold[-1])
    return {"all": all_ok, "last": last_ok}
