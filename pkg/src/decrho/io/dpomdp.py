"""Reader and writer for a subset of the MADP ``.dpomdp`` problem format.

Supported header keys: ``agents``, ``discount`` (must be 1), ``values``,
``states``, ``start`` (also ``start include:`` / ``start exclude:``),
``actions`` and ``observations`` (one line per agent after the key, holding
a count or a list of names).

Supported entries, with ``*`` wildcards and either a joint index or one token
per agent for joint actions and joint observations::

    T: a : s : s' : p        T: a : s  (row over s')      T: a  (matrix | uniform | identity)
    O: a : s' : o : p        O: a : s' (row over o)       O: a  (matrix | uniform)
    R: a : s : s' : o : r    R: a : s : s' (row over o)   R: a : s (matrix s' x o)

Rewards that depend on ``s'`` or ``o`` are reduced to their expectation
under the dynamics. The format carries no horizon; a ``# horizon: N``
comment or the ``horizon`` argument supplies it.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from ..exceptions import DpomdpSemanticError, DpomdpSyntaxError
from ..model import DecPomdpModel, validate_model

ROW_TOL = 1e-9
_TOKEN = re.compile(r":|[^\s:]+")
_NUMBER = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_HORIZON = re.compile(r"#\s*horizon\s*:\s*(\d+)", re.IGNORECASE)
_HEADER_KEYS = ("agents", "discount", "values", "states", "start", "actions", "observations")


class _Line:
    __slots__ = ("number", "tokens")

    def __init__(self, number, tokens):
        self.number = number
        self.tokens = tokens  # list of (text, column)

    def words(self):
        return [t for t, _ in self.tokens]


def _lex(text: str) -> list:
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tokens = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(body)]
        if tokens:
            lines.append(_Line(number, tokens))
    return lines


def _number(token, line) -> float:
    text, col = token
    if not _NUMBER.match(text):
        raise DpomdpSyntaxError(f"expected a number, found {text!r}", line.number, col)
    return float(text)


def _split_colons(tokens):
    """Split a token list into fields at ':' tokens."""
    fields, cur = [], []
    for tok in tokens:
        if tok[0] == ":":
            fields.append(cur)
            cur = []
        else:
            cur.append(tok)
    fields.append(cur)
    return fields


class _Space:
    """A named, finite index space."""

    def __init__(self, what, names):
        self.what = what
        self.names = tuple(names)
        self.index = {n: k for k, n in enumerate(self.names)}

    def __len__(self):
        return len(self.names)

    def resolve(self, token, line):
        text, col = token
        if text == "*":
            return list(range(len(self)))
        if text.isdigit():
            k = int(text)
            if k >= len(self):
                raise DpomdpSemanticError(f"{self.what} index {k} out of range (have {len(self)})",
                                          line.number, col)
            return [k]
        if text in self.index:
            return [self.index[text]]
        raise DpomdpSemanticError(f"unknown {self.what} {text!r}", line.number, col)


def _space_from_tokens(what, tokens, line):
    if len(tokens) == 1 and tokens[0][0].isdigit():
        count = int(tokens[0][0])
        if count < 1:
            raise DpomdpSemanticError(f"{what} count must be positive", line.number, tokens[0][1])
        return _Space(what, [str(k) for k in range(count)])
    if not tokens:
        raise DpomdpSyntaxError(f"missing {what} declaration", line.number, 1)
    names = [t for t, _ in tokens]
    if len(set(names)) != len(names):
        raise DpomdpSemanticError(f"duplicate {what} name", line.number, tokens[0][1])
    return _Space(what, names)


class _Parser:
    def __init__(self, text):
        self.lines = _lex(text)
        self.pos = 0
        self.n_agents = None
        self.agent_names = None
        self.states = None
        self.actions = None
        self.observations = None
        self.start = None
        self.start_line = None
        self.sign = 1.0

    # header -----------------------------------------------------------
    def _next_line(self, what, after):
        if self.pos >= len(self.lines):
            raise DpomdpSyntaxError(f"unexpected end of file while reading {what}", after.number, 1)
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def parse_header(self):
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            words = line.words()
            key = words[0]
            if key in ("T", "O", "R"):
                break
            if key not in _HEADER_KEYS:
                raise DpomdpSyntaxError(f"unknown keyword {key!r}", line.number, line.tokens[0][1])
            self.pos += 1
            self._header_line(key, line)
        for what, value in (("agents", self.n_agents), ("states", self.states),
                            ("actions", self.actions), ("observations", self.observations)):
            if value is None:
                raise DpomdpSemanticError(f"missing '{what}' declaration", None, None)

    def _header_line(self, key, line):
        toks = line.tokens
        if key == "start" and len(toks) > 1 and toks[1][0] in ("include", "exclude"):
            self._start_subset(toks[1][0], toks[3:] if len(toks) > 2 and toks[2][0] == ":" else toks[2:], line)
            return
        if len(toks) < 2 or toks[1][0] != ":":
            raise DpomdpSyntaxError(f"expected ':' after {key!r}", line.number,
                                    toks[1][1] if len(toks) > 1 else toks[0][1] + len(key))
        rest = toks[2:]
        if key == "agents":
            if len(rest) == 1 and rest[0][0].isdigit():
                self.n_agents = int(rest[0][0])
                self.agent_names = tuple(str(i) for i in range(self.n_agents))
            elif rest:
                self.agent_names = tuple(t for t, _ in rest)
                self.n_agents = len(rest)
            else:
                raise DpomdpSyntaxError("missing agent count", line.number, toks[1][1] + 1)
            if self.n_agents < 1:
                raise DpomdpSemanticError("need at least one agent", line.number, rest[0][1])
        elif key == "discount":
            if len(rest) != 1:
                raise DpomdpSyntaxError("discount takes one number", line.number, toks[1][1])
            value = _number(rest[0], line)
            if value != 1.0:
                raise DpomdpSemanticError(f"only undiscounted problems are supported (discount {value:g})",
                                          line.number, rest[0][1])
        elif key == "values":
            word = rest[0][0] if rest else ""
            if word not in ("reward", "cost"):
                raise DpomdpSemanticError("values must be 'reward' or 'cost'", line.number,
                                          rest[0][1] if rest else toks[1][1])
            self.sign = 1.0 if word == "reward" else -1.0
        elif key == "states":
            self.states = _space_from_tokens("state", rest, line)
        elif key == "start":
            self._start_vector(rest, line)
        else:
            self._agent_spaces(key, rest, line)

    def _agent_spaces(self, key, rest, line):
        if self.n_agents is None:
            raise DpomdpSemanticError(f"'{key}' before 'agents'", line.number, line.tokens[0][1])
        what = "action" if key == "actions" else "observation"
        spaces = []
        if rest:
            raise DpomdpSyntaxError(f"'{key}:' must be followed by one line per agent", line.number, rest[0][1])
        for i in range(self.n_agents):
            agent_line = self._next_line(key, line)
            spaces.append(_space_from_tokens(f"{what} of agent {i}", agent_line.tokens, agent_line))
        if key == "actions":
            self.actions = spaces
        else:
            self.observations = spaces

    def _need_states(self, line):
        if self.states is None:
            raise DpomdpSemanticError("'start' before 'states'", line.number, line.tokens[0][1])

    def _start_vector(self, rest, line):
        self._need_states(line)
        S = len(self.states)
        self.start_line = line
        if not rest:
            row = self._next_line("start", line)
            rest = row.tokens
            line = row
        if len(rest) == 1 and rest[0][0] == "uniform":
            self.start = np.full(S, 1.0 / S)
        elif len(rest) == 1 and not _NUMBER.match(rest[0][0]):
            self.start = np.zeros(S)
            self.start[self.states.resolve(rest[0], line)] = 1.0
        else:
            if len(rest) != S:
                raise DpomdpSemanticError(f"start has {len(rest)} entries, expected {S}", line.number, rest[0][1])
            self.start = np.array([_number(t, line) for t in rest])

    def _start_subset(self, mode, rest, line):
        self._need_states(line)
        chosen = set()
        for tok in rest:
            chosen.update(self.states.resolve(tok, line))
        if mode == "exclude":
            chosen = set(range(len(self.states))) - chosen
        if not chosen:
            raise DpomdpSemanticError("start distribution has empty support", line.number, line.tokens[0][1])
        self.start = np.zeros(len(self.states))
        self.start[sorted(chosen)] = 1.0 / len(chosen)
        self.start_line = line

    # entries ----------------------------------------------------------
    def _joint(self, spaces, field, line, what):
        sizes = [len(sp) for sp in spaces]
        total = int(np.prod(sizes))
        if len(field) == 1 and (field[0][0] == "*" or len(spaces) > 1 and field[0][0].isdigit()):
            text, col = field[0]
            if text == "*":
                return list(range(total))
            k = int(text)
            if k >= total:
                raise DpomdpSemanticError(f"joint {what} index {k} out of range (have {total})", line.number, col)
            return [k]
        if len(field) != len(spaces):
            col = field[0][1] if field else line.tokens[0][1]
            raise DpomdpSemanticError(f"joint {what} needs {len(spaces)} components, got {len(field)}",
                                      line.number, col)
        per_agent = [sp.resolve(tok, line) for sp, tok in zip(spaces, field)]
        grids = np.meshgrid(*per_agent, indexing="ij")
        return list(np.ravel_multi_index(tuple(g.ravel() for g in grids), sizes))

    def _one(self, space, field, line):
        if len(field) != 1:
            col = field[1][1] if len(field) > 1 else line.tokens[0][1]
            raise DpomdpSyntaxError(f"expected a single {space.what}", line.number, col)
        return space.resolve(field[0], line)

    def _row(self, length, line, first=None):
        row_line = first or self._next_line("values", line)
        if len(row_line.tokens) != length:
            raise DpomdpSyntaxError(f"expected {length} values, found {len(row_line.tokens)}",
                                    row_line.number, row_line.tokens[0][1])
        return np.array([_number(t, row_line) for t in row_line.tokens])

    def _matrix(self, rows, cols, line):
        """``rows`` lines of ``cols`` numbers, or a lone uniform/identity keyword line."""
        first = self._next_line("matrix", line)
        words = first.words()
        if len(words) == 1 and words[0] in ("uniform", "identity"):
            return words[0]
        out = [self._row(cols, line, first)]
        for _ in range(rows - 1):
            out.append(self._row(cols, line))
        return np.array(out)

    def parse_entries(self):
        S = len(self.states)
        n_ja = int(np.prod([len(sp) for sp in self.actions]))
        n_jz = int(np.prod([len(sp) for sp in self.observations]))
        trans = np.zeros((S, n_ja, S))
        obs = np.zeros((n_ja, S, n_jz))
        rew = np.zeros((S, n_ja, S, n_jz))
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            key = line.tokens[0][0]
            if key not in ("T", "O", "R"):
                raise DpomdpSyntaxError(f"expected a T:, O: or R: entry, found {key!r}",
                                        line.number, line.tokens[0][1])
            if len(line.tokens) < 2 or line.tokens[1][0] != ":":
                raise DpomdpSyntaxError(f"expected ':' after {key!r}", line.number, line.tokens[0][1] + 1)
            fields = _split_colons(line.tokens[2:])
            getattr(self, f"_entry_{key}")(fields, line, trans, obs, rew)
        return trans, obs, rew

    def _entry(self, kind, fields, line):
        """Joint actions of an entry and its remaining fields, trailing ':' dropped."""
        ja = self._joint(self.actions, fields[0], line, "action")
        rest = fields[1:]
        if rest and not rest[-1]:
            rest = rest[:-1]
        return ja, rest

    def _entry_T(self, fields, line, trans, obs, rew):
        S = len(self.states)
        ja, rest = self._entry("T", fields, line)
        if not rest or len(rest) == 1 and rest[0][0][0] in ("uniform", "identity"):
            value = rest[0][0][0] if rest else self._matrix(S, S, line)
            if len(rest) == 1 and len(rest[0]) != 1:
                self._bad_value(rest[0], line)
            if isinstance(value, str):
                value = np.eye(S) if value == "identity" else np.full((S, S), 1.0 / S)
            for a in ja:
                trans[:, a, :] = value
            return
        s = self._one(self.states, rest[0], line)
        if len(rest) == 1:
            trans[np.ix_(s, ja, range(S))] = self._row(S, line)
            return
        s2 = self._one(self.states, rest[1], line)
        if len(rest) == 2:
            trans[np.ix_(s, ja, s2)] = self._row(1, line)[0]
        elif len(rest) == 3:
            trans[np.ix_(s, ja, s2)] = self._value(rest[2], line)
        else:
            raise DpomdpSyntaxError("too many fields in T: entry", line.number, rest[3][0][1] if rest[3] else 1)

    def _entry_O(self, fields, line, trans, obs, rew):
        S = len(self.states)
        n_jz = obs.shape[2]
        ja, rest = self._entry("O", fields, line)
        if not rest or len(rest) == 1 and rest[0][0][0] in ("uniform", "identity"):
            value = rest[0][0][0] if rest else self._matrix(S, n_jz, line)
            if isinstance(value, str):
                if value == "identity":
                    if n_jz != S:
                        raise DpomdpSemanticError("identity observations need as many joint observations as states",
                                                  line.number, rest[0][0][1])
                    value = np.eye(S)
                else:
                    value = np.full((S, n_jz), 1.0 / n_jz)
            obs[ja] = value
            return
        s2 = self._one(self.states, rest[0], line)
        if len(rest) == 1:
            obs[np.ix_(ja, s2, range(n_jz))] = self._row(n_jz, line)
            return
        jz = self._joint(self.observations, rest[1], line, "observation")
        if len(rest) == 2:
            obs[np.ix_(ja, s2, jz)] = self._row(1, line)[0]
        elif len(rest) == 3:
            obs[np.ix_(ja, s2, jz)] = self._value(rest[2], line)
        else:
            raise DpomdpSyntaxError("too many fields in O: entry", line.number, rest[3][0][1] if rest[3] else 1)

    def _entry_R(self, fields, line, trans, obs, rew):
        S = len(self.states)
        n_jz = obs.shape[2]
        ja, rest = self._entry("R", fields, line)
        if not rest:
            raise DpomdpSyntaxError("R: entry needs a state field", line.number, line.tokens[-1][1])
        s = self._one(self.states, rest[0], line)
        if len(rest) == 1:
            value = self._matrix(S, n_jz, line)
            if isinstance(value, str):
                raise DpomdpSemanticError(f"'{value}' is not valid for rewards", line.number, line.tokens[0][1])
            rew[np.ix_(s, ja, range(S), range(n_jz))] = self.sign * value
            return
        s2 = self._one(self.states, rest[1], line)
        if len(rest) == 2:
            rew[np.ix_(s, ja, s2, range(n_jz))] = self.sign * self._row(n_jz, line)
            return
        jz = self._joint(self.observations, rest[2], line, "observation")
        if len(rest) == 3:
            rew[np.ix_(s, ja, s2, jz)] = self.sign * self._row(1, line)[0]
        elif len(rest) == 4:
            rew[np.ix_(s, ja, s2, jz)] = self.sign * self._value(rest[3], line)
        else:
            raise DpomdpSyntaxError("too many fields in R: entry", line.number, rest[4][0][1] if rest[4] else 1)

    def _value(self, field, line):
        if len(field) != 1:
            self._bad_value(field, line)
        return _number(field[0], line)

    @staticmethod
    def _bad_value(field, line):
        col = field[1][1] if len(field) > 1 else line.tokens[-1][1]
        raise DpomdpSyntaxError("expected a single value", line.number, col)


def _check_rows(trans, obs, start):
    bad = np.argwhere(np.abs(trans.sum(axis=2) - 1.0) > ROW_TOL)
    if bad.size:
        s, a = bad[0]
        raise DpomdpSemanticError(f"transition row (s={s}, a={a}) sums to {trans[s, a].sum():.12g}")
    bad = np.argwhere(np.abs(obs.sum(axis=2) - 1.0) > ROW_TOL)
    if bad.size:
        a, s = bad[0]
        raise DpomdpSemanticError(f"observation row (a={a}, s'={s}) sums to {obs[a, s].sum():.12g}")
    if (trans < 0).any() or (obs < 0).any():
        raise DpomdpSemanticError("negative probability")
    if start is not None and (abs(start.sum() - 1.0) > ROW_TOL or (start < 0).any()):
        raise DpomdpSemanticError(f"start distribution sums to {start.sum():.12g}")


def parse_dpomdp(text: str, horizon: int = None) -> DecPomdpModel:
    """Parse ``.dpomdp`` text into a time-homogeneous model."""
    if horizon is None:
        match = _HORIZON.search(text)
        if match is None:
            raise DpomdpSemanticError("no horizon: pass horizon= or add a '# horizon: N' line")
        horizon = int(match.group(1))
    parser = _Parser(text)
    parser.parse_header()
    trans, obs, rew4 = parser.parse_entries()
    S = len(parser.states)
    start = parser.start if parser.start is not None else np.full(S, 1.0 / S)
    _check_rows(trans, obs, start)
    # expected reward over (s', o) given (s, a)
    weights = trans[:, :, :, None] * obs[None]
    if np.any(rew4 != rew4[:, :, :1, :1]):
        rewards = np.einsum("sazk,sazk->sa", weights, rew4)
    else:
        rewards = rew4[:, :, 0, 0].copy()
    model = DecPomdpModel.from_factored(
        horizon, start,
        tuple(len(sp) for sp in parser.actions), tuple(len(sp) for sp in parser.observations),
        trans, obs, rewards,
        state_names=parser.states.names,
        action_names=tuple(sp.names for sp in parser.actions),
        observation_names=tuple(sp.names for sp in parser.observations),
        agent_names=parser.agent_names,
    )
    problems = validate_model(model)
    if problems:
        raise DpomdpSemanticError("; ".join(problems[:3]))
    return model


def read_dpomdp(path, horizon: int = None) -> DecPomdpModel:
    return parse_dpomdp(Path(path).read_text(encoding="utf-8"), horizon)


def _names(names, count):
    if names is None:
        return str(count)
    if all(re.fullmatch(r"[A-Za-z_][\w\-.]*", n) for n in names):
        return " ".join(names)
    return str(count)


def write_dpomdp(model: DecPomdpModel) -> str:
    """Serialize a time-homogeneous model built from separate transition/observation tables.

    Probabilities are written with ``repr`` so a parse gives back identical floats.
    """
    if model.factors is None or not model.is_homogeneous:
        raise ValueError("only time-homogeneous models with stored transition/observation tables can be written")
    trans, obs = model.factors
    rew = model.rewards[0]
    n, S = model.n_agents, model.n_states
    acts, zs = model.action_sizes[0], model.observation_sizes[0]
    out = [f"# horizon: {model.horizon}"]
    out.append(f"agents: {_names(model.agent_names, n)}")
    out.append("discount: 1")
    out.append("values: reward")
    out.append(f"states: {_names(model.state_names, S)}")
    out.append("start:")
    out.append(" ".join(repr(float(x)) for x in model.initial_belief))
    out.append("actions:")
    for i in range(n):
        out.append(_names(model.action_names[i] if model.action_names else None, acts[i]))
    out.append("observations:")
    for i in range(n):
        out.append(_names(model.observation_names[i] if model.observation_names else None, zs[i]))
    for ja in range(trans.shape[1]):
        tokens = " ".join(str(a) for a in model.joint_action(0, ja))
        for s in range(S):
            out.append(f"T: {tokens} : {s} :")
            out.append(" ".join(repr(float(x)) for x in trans[s, ja]))
    for ja in range(obs.shape[0]):
        tokens = " ".join(str(a) for a in model.joint_action(0, ja))
        for s2 in range(S):
            out.append(f"O: {tokens} : {s2} :")
            out.append(" ".join(repr(float(x)) for x in obs[ja, s2]))
    for ja in range(rew.shape[1]):
        tokens = " ".join(str(a) for a in model.joint_action(0, ja))
        for s in range(S):
            if rew[s, ja] != 0.0:
                out.append(f"R: {tokens} : {s} : * : * : {float(rew[s, ja])!r}")
    return "\n".join(out) + "\n"
