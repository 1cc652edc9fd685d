# Copyright (c) 2026, cydistill contributors
# All rights reserved. See LICENSE for the full BSD 2-Clause text.
"""
Genetic-programming symbolic regression over (p2, sigma3).

Trees use the operator set {add, sub, mul, div, log, sqrt} with protected
semantics, so any tree evaluates to finite values on the feature domain.
Trees serialize to DEAP's prefix form, e.g. ``add(mul(2.0, p2), sigma3)``:

    expr     := call | terminal
    call     := name "(" expr ("," expr)* ")"
    name     := add | sub | mul | div | log | sqrt
    terminal := p2 | sigma3 | float literal (Python repr)
"""
import copy
import dataclasses
import logging
import math
import operator
import random

import joblib
import numpy as np
import sympy
from deap import base, creator, gp, tools

import cydistill.lib.cyd_common as cyd_common
import cydistill.lib.cyd_dataset as cyd_dataset
import cydistill.lib.cyd_formula as cyd_formula
from cydistill.lib.cyd_common import CYDValidationError

C_MAX = 30
LOSS_WEIGHT = 0.7
COMPLEXITY_WEIGHT = 0.3
PROTECT_EPS = 1e-9
PROTECT_BIG = 1e9
VALUE_BOUND = 1e100
LOSS_CAP = 1e300
GOLDEN_STEPS = 30
BRACKET_EXPANSIONS = 12
MOTIFS = ("p2", "1/p2^n", "sigma3", "sigma3/p2^3", "p2^2", "constant")
_INV_PHI = (math.sqrt(5) - 1) / 2
_LOG = logging.getLogger("cyd_symreg")


def _bound(x):
    x = np.nan_to_num(np.asarray(x, dtype=float), nan=0.0,
                      posinf=VALUE_BOUND, neginf=-VALUE_BOUND)

    return np.clip(x, -VALUE_BOUND, VALUE_BOUND)


def add(a, b):
    with np.errstate(all="ignore"):
        return _bound(np.add(a, b))


def sub(a, b):
    with np.errstate(all="ignore"):
        return _bound(np.subtract(a, b))


def mul(a, b):
    with np.errstate(all="ignore"):
        return _bound(np.multiply(a, b))


def div(a, b):
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float),
                               np.asarray(b, dtype=float))
    small = np.abs(b) < PROTECT_EPS

    with np.errstate(all="ignore"):
        out = np.where(small, np.sign(a) * PROTECT_BIG,
                       a / np.where(small, 1.0, b))

    return _bound(out)


def log(a):
    return _bound(np.log(np.maximum(a, PROTECT_EPS)))


def sqrt(a):
    return _bound(np.sqrt(np.maximum(a, 0.0)))


def _random_constant():
    return random.uniform(-2.0, 2.0)


PSET = gp.PrimitiveSet("MAIN", 2)
PSET.addPrimitive(add, 2, name="add")
PSET.addPrimitive(sub, 2, name="sub")
PSET.addPrimitive(mul, 2, name="mul")
PSET.addPrimitive(div, 2, name="div")
PSET.addPrimitive(log, 1, name="log")
PSET.addPrimitive(sqrt, 1, name="sqrt")
PSET.addEphemeralConstant("cyd_const", _random_constant)
PSET.renameArguments(ARG0="p2", ARG1="sigma3")

if not hasattr(creator, "CydFitness"):
    creator.create("CydFitness", base.Fitness, weights=(-1.0, -1.0))

if not hasattr(creator, "CydTree"):
    creator.create("CydTree", gp.PrimitiveTree, fitness=creator.CydFitness)

ExpressionTree = creator.CydTree

P2_SYMBOL, SIGMA3_SYMBOL = sympy.symbols("p2 sigma3", positive=True)
_SYMPY_OPS = {
    "add" : operator.add,
    "sub" : operator.sub,
    "mul" : operator.mul,
    "div" : operator.truediv,
    "log" : sympy.log,
    "sqrt": sympy.sqrt,
}


@dataclasses.dataclass
class SymregConfig:
    iterations: int = 200
    population: int = 60
    max_complexity: int = C_MAX
    tournament_size: int = 5
    crossover_rate: float = 0.7
    subtree_mutation_rate: float = 0.2
    point_mutation_rate: float = 0.1
    constant_steps: int = 10
    refine_top: int = 10
    init_max_depth: int = 3
    seed: int = 0

    def validate(self):
        errors = []

        for name in ("iterations", "population", "max_complexity",
                     "tournament_size", "refine_top", "init_max_depth"):
            if int(getattr(self, name)) < 1:
                errors.append(f"symreg.{name} must be >= 1")

        if self.constant_steps < 0:
            errors.append("symreg.constant_steps must be >= 0")

        for name in ("crossover_rate", "subtree_mutation_rate",
                     "point_mutation_rate"):
            if not 0 <= getattr(self, name) <= 1:
                errors.append(f"symreg.{name} must be in [0, 1]")

        if self.subtree_mutation_rate + self.point_mutation_rate > 1:
            errors.append("symreg mutation rates must sum to at most 1")

        return errors


@dataclasses.dataclass(frozen=True)
class FrontEntry:
    tree: str
    loss: float
    complexity: int


@dataclasses.dataclass
class ParetoFront:
    """Nondominated (loss, complexity) entries sorted by complexity."""
    entries: list
    target_variance: float = 1.0

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclasses.dataclass
class SeedResult:
    seed: int
    tree: str
    complexity: int
    loss: float
    r2: float
    rmse: float
    motifs: tuple

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass
class EnsembleReport:
    results: list
    frequencies: dict
    best_r2: float
    median_r2: float
    worst_r2: float
    mean_r2: float
    std_r2: float
    n_above_999: int

    @property
    def seeds(self):
        return [r.seed for r in self.results]


def parse_tree(prefix):
    return ExpressionTree.from_string(prefix, PSET)


def to_prefix(tree):
    return str(tree)


def complexity(tree):
    return len(tree)


def _as_tree(tree):
    return parse_tree(tree) if isinstance(tree, str) else tree


def compile_tree(tree):
    return gp.compile(_as_tree(tree), PSET)


def predict(tree, p2, sigma3):
    p2 = np.asarray(p2, dtype=float)
    out = compile_tree(tree)(p2, np.asarray(sigma3, dtype=float))

    return np.broadcast_to(np.asarray(out, dtype=float), p2.shape).copy()


def evaluate(tree, f):
    """Evaluate on a FeatureVector or a (p2, sigma3) pair."""
    if hasattr(f, "p2"):
        p2, sigma3 = f.p2, f.sigma3
    else:
        p2, sigma3 = f

    out = predict(tree, p2, sigma3)

    return float(out) if out.ndim == 0 else out


def five_term_tree(c):
    c = [float(x) for x in cyd_formula._coeff_array(c)]

    return parse_tree(
        f"add(add(add(add({c[0]!r}, div({c[1]!r}, mul(p2, p2))),"
        f" div(mul({c[2]!r}, sigma3), mul(p2, mul(p2, p2)))),"
        f" mul({c[3]!r}, p2)), mul({c[4]!r}, sigma3))")


def to_sympy(tree):
    stack = []

    for node in reversed(_as_tree(tree)):
        if isinstance(node, gp.Primitive):
            args = [stack.pop() for _ in range(node.arity)]
            stack.append(_SYMPY_OPS[node.name](*args))
        elif node.value == "p2":
            stack.append(P2_SYMBOL)
        elif node.value == "sigma3":
            stack.append(SIGMA3_SYMBOL)
        else:
            stack.append(sympy.Float(node.value))

    return stack[0]


def render_infix(tree):
    return sympy.sstr(to_sympy(tree))


def detect_motifs(tree):
    """
    Motifs of the expanded expression: p2, 1/p2^n, sigma3, sigma3/p2^3,
    p2^2 and a constant term.
    """
    expr = sympy.expand(to_sympy(tree))
    found = set()

    if P2_SYMBOL in expr.free_symbols:
        found.add("p2")

    if SIGMA3_SYMBOL in expr.free_symbols:
        found.add("sigma3")

    for sub_expr in sympy.preorder_traversal(expr):
        if isinstance(sub_expr, sympy.Pow) and sub_expr.base == P2_SYMBOL \
                and sub_expr.exp.is_negative:
            found.add("1/p2^n")

    for term in sympy.Add.make_args(expr):
        if term.is_number:
            if term != 0:
                found.add("constant")
            continue

        powers = term.as_powers_dict()
        p2_power = powers.get(P2_SYMBOL, 0)

        if p2_power == 2:
            found.add("p2^2")

        if p2_power == -3 and powers.get(SIGMA3_SYMBOL, 0) == 1:
            found.add("sigma3/p2^3")

    return tuple(m for m in MOTIFS if m in found)


def _mse(pred, train):
    with np.errstate(all="ignore"):
        err = np.sum(train.weight * (train.y - pred) ** 2) / \
            np.sum(train.weight)

    return float(err) if np.isfinite(err) else LOSS_CAP


def _evaluate_individual(ind, train):
    pred = predict(ind, train.p2, train.sigma3)

    return min(_mse(pred, train), LOSS_CAP), len(ind)


def _constant_positions(tree):
    return [i for i, node in enumerate(tree)
            if isinstance(node, gp.Terminal) and
            not isinstance(node.value, str)]


def _parametric(tree, positions):
    names = [f"_c{j}" for j in range(len(positions))]
    nodes = list(tree)

    for j, pos in enumerate(positions):
        nodes[pos] = gp.Terminal(names[j], True, object)

    code = str(gp.PrimitiveTree(nodes))
    args = ", ".join(["p2", "sigma3"] + names)

    return eval(f"lambda {args}: {code}", dict(PSET.context))


def _golden_section(f, lo, hi, steps):
    a, b = lo, hi
    c, d = b - _INV_PHI * (b - a), a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)

    for _ in range(steps):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)

    return (c, fc) if fc < fd else (d, fd)


def _line_search(f, x0, f0):
    """Bracket a minimum around x0 by doubling steps, then golden-section."""
    step = max(0.1, 0.1 * abs(x0))

    for _ in range(BRACKET_EXPANSIONS):
        f_lo, f_hi = f(x0 - step), f(x0 + step)

        if f_lo < f0 and f_lo <= f_hi:
            x0, f0 = x0 - step, f_lo
        elif f_hi < f0:
            x0, f0 = x0 + step, f_hi
        else:
            break

        step *= 2

    x, fx = _golden_section(f, x0 - step, x0 + step, GOLDEN_STEPS)

    return (x, fx) if fx < f0 else (x0, f0)


def refine_constants(ind, train, steps):
    """
    Coordinate-wise golden-section search over the tree's constants.

    Returns True when the loss improved; the tree is updated in place.
    """
    positions = _constant_positions(ind)

    if not positions or steps < 1:
        return False

    func = _parametric(ind, positions)
    params = [float(ind[p].value) for p in positions]

    def loss(values):
        with np.errstate(all="ignore"):
            pred = np.broadcast_to(
                np.asarray(func(train.p2, train.sigma3, *values),
                           dtype=float), train.y.shape)

        return _mse(pred, train)

    start = best = loss(params)

    for _ in range(steps):
        before = best

        for j in range(len(params)):
            def along(x, j=j):
                trial = list(params)
                trial[j] = x

                return loss(trial)

            x, fx = _line_search(along, params[j], best)

            if fx < best:
                params[j], best = x, fx

        if not best < before:
            break

    if not best < start:
        return False

    for j, pos in enumerate(positions):
        ind[pos] = gp.Terminal(params[j], False, object)

    ind.fitness.values = (min(best, LOSS_CAP), len(ind))

    return True


def _toolbox(cfg):
    toolbox = base.Toolbox()
    toolbox.register("expr", gp.genHalfAndHalf, pset=PSET, min_=0,
                     max_=cfg.init_max_depth)
    toolbox.register("individual", tools.initIterate, ExpressionTree,
                     toolbox.expr)
    toolbox.register("mate", gp.cxOnePoint)
    toolbox.register("expr_mut", gp.genFull, min_=0, max_=2)
    toolbox.register("mutate", gp.mutUniform, expr=toolbox.expr_mut,
                     pset=PSET)
    toolbox.register("point", gp.mutNodeReplacement, pset=PSET)
    toolbox.register("select", tools.selTournament,
                     tournsize=cfg.tournament_size)

    return toolbox


def _within_limit(op, parents, max_complexity, attempts=10):
    """Apply op to copies until every child fits; else keep the parents."""
    for _ in range(attempts):
        children = op(*[copy.deepcopy(p) for p in parents])

        if all(len(c) <= max_complexity for c in children):
            for c in children:
                del c.fitness.values
                c.refined = False

            return list(children)

    return list(parents)


def _new_individual(toolbox, cfg):
    while True:
        ind = toolbox.individual()

        if len(ind) <= cfg.max_complexity:
            ind.refined = False
            return ind


def _front_from_archive(archive, target_variance):
    best = {}

    for ind in archive:
        loss, comp = ind.fitness.values
        key = int(comp)
        prefix = to_prefix(ind)

        if key not in best or (loss, prefix) < (best[key].loss,
                                                best[key].tree):
            best[key] = FrontEntry(prefix, float(loss), key)

    entries = []

    for comp in sorted(best):
        if not entries or best[comp].loss < entries[-1].loss:
            entries.append(best[comp])

    return ParetoFront(entries, target_variance)


def evolve(train, cfg=None, callback=None, silent=False):
    """
    Run generational GP and return the front over every tree evaluated.

    Each generation: tournament selection, one-point crossover, subtree or
    point mutation (trees above max_complexity are retried), evaluation of
    changed trees, then constant refinement of the best refine_top trees.
    """
    cfg = SymregConfig() if cfg is None else cfg
    errors = cfg.validate()

    if errors:
        raise CYDValidationError("; ".join(errors))

    if len(train) == 0:
        raise CYDValidationError("evolve needs a nonempty dataset")

    random.seed(cfg.seed)
    toolbox = _toolbox(cfg)
    population = [_new_individual(toolbox, cfg)
                  for _ in range(cfg.population)]
    archive = tools.ParetoFront()

    def evaluate_invalid(pop):
        for ind in pop:
            if not ind.fitness.valid:
                ind.fitness.values = _evaluate_individual(ind, train)

        ranked = sorted(pop, key=lambda i: i.fitness.values[0])

        for ind in ranked[:cfg.refine_top]:
            if not getattr(ind, "refined", False):
                if not refine_constants(ind, train, cfg.constant_steps):
                    ind.refined = True

        archive.update(pop)

    evaluate_invalid(population)
    generations = cyd_common.progress(range(cfg.iterations),
                                      desc=f"symreg seed={cfg.seed}",
                                      silent=silent)

    for gen in generations:
        offspring = [toolbox.clone(i) for i in
                     toolbox.select(population, len(population))]

        for i in range(1, len(offspring), 2):
            if random.random() < cfg.crossover_rate:
                offspring[i - 1], offspring[i] = _within_limit(
                    toolbox.mate, offspring[i - 1:i + 1],
                    cfg.max_complexity)

        for i in range(len(offspring)):
            r = random.random()

            if r < cfg.subtree_mutation_rate:
                offspring[i], = _within_limit(toolbox.mutate, [offspring[i]],
                                              cfg.max_complexity)
            elif r < cfg.subtree_mutation_rate + cfg.point_mutation_rate:
                offspring[i], = _within_limit(toolbox.point, [offspring[i]],
                                              cfg.max_complexity)

        evaluate_invalid(offspring)
        population = offspring
        _LOG.debug("generation %d best loss %.6g", gen,
                   min(i.fitness.values[0] for i in population))

    front = _front_from_archive(
        archive, cyd_formula.weighted_rmse(
            np.full_like(train.y, np.average(train.y, weights=train.weight)),
            train.y, train.weight) ** 2)

    cyd_common.logit({
        "level"  : "VERBOSE",
        "message": f"seed {cfg.seed}: front of {len(front)} trees, best loss"
                   f" {front.entries[-1].loss:.3g}"
    }, _callback=callback, silent=silent)

    return front


def score(entry, target_variance=1.0):
    scale = target_variance if target_variance > 0 else 1.0

    return LOSS_WEIGHT * entry.loss / scale + \
        COMPLEXITY_WEIGHT * entry.complexity / C_MAX


def select_pareto(front):
    """
    argmin of 0.7 L + 0.3 C / 30, L taken relative to the target variance
    the front was evolved against. Ties go to smaller C, then lower L.
    """
    if not len(front):
        raise CYDValidationError("cannot select from an empty front")

    return min(front.entries,
               key=lambda e: (round(score(e, front.target_variance), 12),
                              e.complexity, e.loss))


def _ensemble_member(ds, seed, cfg, train_fraction):
    train, test = cyd_dataset.split(ds, train_fraction, seed)
    front = evolve(train, dataclasses.replace(cfg, seed=int(seed)),
                   silent=True)
    chosen = select_pareto(front)
    pred = predict(chosen.tree, test.p2, test.sigma3)

    return SeedResult(int(seed), chosen.tree, chosen.complexity, chosen.loss,
                      cyd_formula.r_squared(pred, test.y, test.weight),
                      cyd_formula.weighted_rmse(pred, test.y, test.weight),
                      detect_motifs(chosen.tree))


def ensemble_run(ds, seeds, cfg=None, train_fraction=0.8, n_jobs=1,
                 callback=None, silent=False):
    """One evolve + select per seed on its own split, then motif counts."""
    cfg = SymregConfig() if cfg is None else cfg
    seeds = [int(s) for s in seeds]

    if len(seeds) < 2:
        raise CYDValidationError("an ensemble needs at least two seeds")

    if n_jobs == 1:
        results = [_ensemble_member(ds, s, cfg, train_fraction)
                   for s in cyd_common.progress(seeds, desc="ensemble",
                                                silent=silent)]
    else:
        results = joblib.Parallel(n_jobs=n_jobs)(
            joblib.delayed(_ensemble_member)(ds, s, cfg, train_fraction)
            for s in seeds)

    frequencies = {m: sum(m in r.motifs for r in results) for m in MOTIFS}
    r2 = np.array([np.nan if r.r2 is None else r.r2 for r in results])
    finite = np.sort(r2[np.isfinite(r2)])

    if finite.size == 0:
        finite = np.array([np.nan])

    cyd_common.logit({
        "level"  : "VERBOSE",
        "message": f"ensemble of {len(seeds)} seeds: median test R^2"
                   f" {np.median(finite):.4f}"
    }, _callback=callback, silent=silent)

    return EnsembleReport(results, frequencies, float(finite[-1]),
                          float(np.median(finite)), float(finite[0]),
                          float(np.mean(finite)), float(np.std(finite)),
                          int(np.sum(finite > 0.999)))
