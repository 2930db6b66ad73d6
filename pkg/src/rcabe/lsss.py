"""Boolean access policies compiled to linear secret sharing matrices.

Grammar (keywords case-insensitive, `=` binds tighter than everything):

    expr   := term (OR term)*
    term   := factor (AND factor)*
    factor := ATTR | "(" expr ")"
    ATTR   := name ("=" value)?

Compilation uses the recursive AND/OR gadget: an AND gate appends a fresh
matrix column (left child keeps the parent vector extended by 1, right
child gets -1 in the new column), an OR gate hands the parent vector to
both children.  A set of attributes satisfies the policy iff the target
vector (1, 0, ..., 0) lies in the span of the rows it holds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class PolicyError(Exception):
    """Malformed policy expression."""


_TOKEN = re.compile(r"\s*(\(|\)|[A-Za-z0-9_.:+/-]+(?:=[A-Za-z0-9_.:+/-]+)?)")


def _tokenize(expr: str) -> list[str]:
    tokens, pos = [], 0
    while pos < len(expr):
        m = _TOKEN.match(expr, pos)
        if not m:
            raise PolicyError("unexpected character at %d in %r" % (pos, expr))
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


def parse_policy(expr: str):
    """Parse to an AST of ("attr", label) / ("and", l, r) / ("or", l, r)."""
    if not expr or not expr.strip():
        raise PolicyError("empty policy expression")
    tokens = _tokenize(expr)
    idx = 0

    def peek():
        return tokens[idx] if idx < len(tokens) else None

    def parse_expr():
        nonlocal idx
        node = parse_term()
        while peek() is not None and peek().upper() == "OR":
            idx += 1
            node = ("or", node, parse_term())
        return node

    def parse_term():
        nonlocal idx
        node = parse_factor()
        while peek() is not None and peek().upper() == "AND":
            idx += 1
            node = ("and", node, parse_factor())
        return node

    def parse_factor():
        nonlocal idx
        tok = peek()
        if tok is None:
            raise PolicyError("unexpected end of expression")
        if tok == "(":
            idx += 1
            node = parse_expr()
            if peek() != ")":
                raise PolicyError("missing closing parenthesis")
            idx += 1
            return node
        if tok == ")" or tok.upper() in ("AND", "OR"):
            raise PolicyError("expected attribute, found %r" % tok)
        idx += 1
        return ("attr", tok)

    node = parse_expr()
    if idx != len(tokens):
        raise PolicyError("trailing input after position %d" % idx)
    return node


def eval_policy(node, attrs) -> bool:
    """Boolean evaluation of the AST over an attribute set."""
    kind = node[0]
    if kind == "attr":
        return node[1] in attrs
    if kind == "and":
        return eval_policy(node[1], attrs) and eval_policy(node[2], attrs)
    return eval_policy(node[1], attrs) or eval_policy(node[2], attrs)


def policy_leaves(node) -> list[str]:
    if node[0] == "attr":
        return [node[1]]
    return policy_leaves(node[1]) + policy_leaves(node[2])


@dataclass
class AccessPolicy:
    matrix: list            # L rows, each of length n, entries mod `order`
    row_labels: list        # row index -> attribute label
    source_expr: str
    order: int

    @property
    def rows(self) -> int:
        return len(self.matrix)

    @property
    def cols(self) -> int:
        return len(self.matrix[0])

    def ast(self):
        return parse_policy(self.source_expr)


@dataclass
class ShareSet:
    secret: int
    vector: list
    shares: list


@dataclass
class ReconstructionPlan:
    rows: list              # row indices into the policy matrix
    coeffs: list            # matching scalars, sum(c_i * M_i) = (1, 0, ..)


def compile_policy(expr: str, order: int) -> AccessPolicy:
    """Compile a boolean expression into an (M, row-label) share structure."""
    ast = parse_policy(expr)
    rows: list[tuple[list[int], str]] = []
    width = 1

    def assign(node, vec):
        nonlocal width
        kind = node[0]
        if kind == "attr":
            rows.append((vec, node[1]))
        elif kind == "or":
            assign(node[1], vec)
            assign(node[2], vec)
        else:  # and
            # the fresh coordinate lives at the current global width, so
            # sibling AND gates never share a column; both child vectors are
            # fixed before recursing (the subtree advances the counter)
            padded = vec + [0] * (width - len(vec))
            width += 1
            left_vec = padded + [1]
            right_vec = [0] * (width - 1) + [-1]
            assign(node[1], left_vec)
            assign(node[2], right_vec)

    assign(ast, [1])
    matrix = [[(v[i] if i < len(v) else 0) % order for i in range(width)] for v, _ in rows]
    return AccessPolicy(
        matrix=matrix,
        row_labels=[label for _, label in rows],
        source_expr=expr,
        order=order,
    )


def share_secret(policy: AccessPolicy, secret: int, rng) -> ShareSet:
    """Split `secret` into one share per matrix row."""
    order = policy.order
    vector = [secret % order] + [rng.scalar(order) for _ in range(policy.cols - 1)]
    shares = [
        sum(m * v for m, v in zip(row, vector)) % order for row in policy.matrix
    ]
    return ShareSet(secret=secret % order, vector=vector, shares=shares)


def find_reconstruction(policy: AccessPolicy, attrs) -> ReconstructionPlan | None:
    """Coefficients recombining shares of rows labeled by `attrs`, or None.

    Solves sum(c_i * M_i) = (1, 0, ..., 0) over Z_order by Gaussian
    elimination, visiting usable rows in index order so the chosen support
    is the lexicographically-first workable subset.
    """
    if not attrs:
        raise ValueError("attribute set must be nonempty")
    attrs = set(attrs)
    order = policy.order
    usable = [i for i, label in enumerate(policy.row_labels) if label in attrs]
    if not usable:
        return None

    n = policy.cols
    k = len(usable)
    # Augmented system A * c = target, where A columns are usable rows of M.
    aug = [[policy.matrix[usable[j]][eq] for j in range(k)] + [1 if eq == 0 else 0]
           for eq in range(n)]

    pivot_of_col: dict[int, int] = {}
    eq_used = [False] * n
    for col in range(k):
        pivot = next(
            (e for e in range(n) if not eq_used[e] and aug[e][col] % order != 0),
            None,
        )
        if pivot is None:
            continue
        inv = pow(aug[pivot][col] % order, -1, order)
        aug[pivot] = [(x * inv) % order for x in aug[pivot]]
        for e in range(n):
            if e != pivot and aug[e][col] % order != 0:
                factor = aug[e][col] % order
                aug[e] = [(a - factor * bp) % order for a, bp in zip(aug[e], aug[pivot])]
        eq_used[pivot] = True
        pivot_of_col[col] = pivot

    for e in range(n):
        if not eq_used[e] and aug[e][k] % order != 0:
            return None  # inconsistent: target not in the span

    coeffs = [0] * k
    for col, e in pivot_of_col.items():
        coeffs[col] = aug[e][k] % order

    rows = [usable[j] for j in range(k) if coeffs[j] != 0]
    plan_coeffs = [coeffs[j] for j in range(k) if coeffs[j] != 0]
    if not rows:
        return None
    return ReconstructionPlan(rows=rows, coeffs=plan_coeffs)
