"""Binary MILP container and a deterministic CPLEX-LP writer."""

from dataclasses import dataclass, field

SENSES = (">=", "=", "<=")


@dataclass(frozen=True)
class MilpVar:
    id: int
    name: str
    kind: str = "binary"


@dataclass(frozen=True)
class LinConstraint:
    terms: tuple          # ((coef, var_id), ...)
    sense: str
    rhs: int
    tag: str = "core"


@dataclass
class MilpModel:
    name: str = "model"
    vars: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: tuple = None   # ("min" | "max", (var_id, ...)) or None for pure feasibility
    meta: dict = field(default_factory=dict)
    _by_name: dict = field(default_factory=dict, repr=False)

    def add_var(self, name):
        if name in self._by_name:
            raise ValueError(f"duplicate variable name {name!r}")
        v = MilpVar(len(self.vars), name)
        self.vars.append(v)
        self._by_name[name] = v.id
        return v.id

    def var_id(self, name):
        return self._by_name[name]

    def add_constraint(self, terms, sense, rhs, tag="core"):
        if sense not in SENSES:
            raise ValueError(f"bad sense {sense!r}")
        terms = tuple((int(c), int(v)) for c, v in terms)
        seen = set()
        for c, v in terms:
            if c == 0:
                raise ValueError("zero coefficient")
            if not 0 <= v < len(self.vars):
                raise ValueError(f"undeclared variable id {v}")
            if v in seen:
                raise ValueError(f"variable {self.vars[v].name} repeated in one constraint")
            seen.add(v)
        self.constraints.append(LinConstraint(terms, sense, int(rhs), tag))
        return len(self.constraints) - 1

    def num_vars(self):
        return len(self.vars)

    def num_constraints(self, tags=None):
        if tags is None:
            return len(self.constraints)
        return sum(1 for c in self.constraints if c.tag in tags)

    def tag_counts(self):
        out = {}
        for c in self.constraints:
            out[c.tag] = out.get(c.tag, 0) + 1
        return out

    def check(self, assignment):
        """True if a full 0/1 assignment (list indexed by var id) satisfies every constraint."""
        for con in self.constraints:
            lhs = sum(c * assignment[v] for c, v in con.terms)
            if con.sense == ">=" and lhs < con.rhs:
                return False
            if con.sense == "<=" and lhs > con.rhs:
                return False
            if con.sense == "=" and lhs != con.rhs:
                return False
        return True


def _expr(terms, names):
    parts = []
    for k, (c, v) in enumerate(terms):
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        tok = names[v] if mag == 1 else f"{mag} {names[v]}"
        if k == 0:
            parts.append(tok if c > 0 else f"- {tok}")
        else:
            parts.append(f"{sign} {tok}")
    return parts


def _wrap(head, parts, tail="", width=8):
    lines = []
    for i in range(0, len(parts), width):
        chunk = " ".join(parts[i:i + width])
        lines.append((head if i == 0 else "   ") + chunk)
    if not lines:
        lines.append(head.rstrip())
    lines[-1] += tail
    return lines


def emit_lp(model):
    """CPLEX LP text: objective, one constraint per id order, Binary section, End."""
    names = [v.name for v in model.vars]
    out = [f"\\ {model.name}"]
    if model.objective is None:
        out.append("Minimize")
        out.append(" obj: 0 " + names[0] if names else " obj:")
    else:
        sense, ids = model.objective
        out.append("Maximize" if sense == "max" else "Minimize")
        out.extend(_wrap(" obj: ", _expr([(1, v) for v in ids], names)))
    out.append("Subject To")
    for i, con in enumerate(model.constraints):
        out.extend(_wrap(f" c{i}: ", _expr(con.terms, names), f" {con.sense} {con.rhs}"))
    out.append("Binary")
    for i in range(0, len(names), 8):
        out.append(" " + " ".join(names[i:i + 8]))
    out.append("End")
    return "\n".join(out) + "\n"
