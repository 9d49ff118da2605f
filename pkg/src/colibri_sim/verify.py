"""Exhaustive exploration of delivery interleavings and trace oracles.

The explorer re-runs the machine from cycle 0 for every branch. Each message
latency is a choice point; at a new choice point the simulator state is
fingerprinted, already seen states are cut off and the other latencies are
pushed as prefixes to replay later. Channels stay FIFO whatever the choice.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence

from .config import (
    AdapterKind,
    AtomicFlavor,
    ConfigError,
    CoreProgram,
    ExplorationConfig,
    Mutation,
    ProgramKind,
    RunConfig,
    SimConfig,
    TargetOrder,
    VerifyWorkload,
)
from .messages import Endpoint, MemoryMessage, MsgKind
from .monitor import Property, ProtocolMonitor, ProtocolViolation
from .sim import RunOutcome, RunResult, SimulationError, Simulator
from .trace import Trace, TraceRecord, TraceRecorder
from .workloads import build_simulator, trace_header

logger = logging.getLogger(__name__)

EXPLORATION_BACKOFF = 2
EXPLORATION_COMPUTE = 2
EXPLORATION_CYCLE_BUDGET = 2_000

EXPLORED_PROPERTIES = (
    Property.MUTUAL_EXCLUSION,
    Property.ATOMICITY_ORACLE,
    Property.FIFO_SERVICE,
    Property.NO_LOST_WAKEUP,
    Property.DEADLOCK_FREE,
    Property.STARVATION_FREE,
)

VIOLATION_OUTCOME = "violation"


class VerificationFailed(Exception):
    """At least one property failed; carries where the counterexamples went."""

    def __init__(self, message: str, counterexamples: Sequence[Any] = ()):
        self.counterexamples = list(counterexamples)
        super().__init__(message)


@dataclass
class Verdict:
    """Outcome of one property; failing verdicts carry the offending trace."""

    prop: Property
    holds: bool
    counterexample: Optional[Trace] = None
    detail: str = ""
    inconclusive: bool = False

    def __post_init__(self):
        if self.holds == (self.counterexample is not None):
            raise ValueError("a counterexample accompanies exactly the failing verdicts")

    @property
    def status(self) -> str:
        if not self.holds:
            return "fails"
        return "inconclusive" if self.inconclusive else "holds"


@dataclass
class ExplorationResult:
    config: ExplorationConfig
    adapter: AdapterKind
    verdicts: list[Verdict]
    runs: int = 0
    states: int = 0
    terminals: int = 0
    pruned: int = 0
    inconclusive: bool = False

    @property
    def holds(self) -> bool:
        return all(verdict.holds for verdict in self.verdicts)

    def failed(self) -> list[Verdict]:
        return [verdict for verdict in self.verdicts if not verdict.holds]

    def verdict(self, prop: Property) -> Optional[Verdict]:
        for verdict in self.verdicts:
            if verdict.prop is prop:
                return verdict
        return None


# -- exploration machine -----------------------------------------------------------


def flavor_for(adapter: AdapterKind) -> AtomicFlavor:
    """The increment flavor an exploration runs on ``adapter``."""
    if adapter is AdapterKind.PLAIN_LRSC:
        return AtomicFlavor.LR_SC
    if adapter is AdapterKind.AMO_ONLY:
        return AtomicFlavor.AMO_ADD
    if adapter is AdapterKind.COLIBRI:
        return AtomicFlavor.COLIBRI
    return AtomicFlavor.LRSC_WAIT


def _span(first: int, last: int) -> str:
    return str(first) if first == last else f"{first}-{last}"


def exploration_run(config: ExplorationConfig, adapter: Optional[AdapterKind] = None) -> RunConfig:
    """Machine and core programs for one exploration."""
    adapter = adapter or config.adapter
    sim = SimConfig(
        n_cores=config.n_cores,
        n_banks=config.n_banks,
        channel_latency=min(config.delay_choices),
        adapter=adapter,
        queue_slots=config.queue_slots,
        addresses_per_bank=config.addresses_per_bank,
        backoff_cycles=EXPLORATION_BACKOFF,
        backoff_jitter=0,
        fail_retry_window=0,
        max_cycles=EXPLORATION_CYCLE_BUDGET,
        monitor=True,
    )
    flavor = flavor_for(adapter)
    last = config.n_cores - 1

    def increments(cores: str) -> CoreProgram:
        return CoreProgram(
            cores=cores,
            kind=ProgramKind.RMW_LOOP,
            iterations=config.ops_per_core,
            target_addresses=list(range(config.addresses)),
            target_order=TargetOrder.ROUND_ROBIN,
            atomic_flavor=flavor,
            backoff=EXPLORATION_BACKOFF,
            cs_length=EXPLORATION_COMPUTE,
            max_retries=config.max_retries if flavor is AtomicFlavor.LR_SC else None,
        )

    def writer() -> CoreProgram:
        return CoreProgram(
            cores=str(last),
            kind=ProgramKind.STORE_ONCE,
            target_addresses=[0],
            value=1,
            start_delay=config.writer_delay,
        )

    workload = config.workload
    if workload is VerifyWorkload.INCREMENTS:
        return RunConfig(sim=sim, programs=[increments("all")])
    if config.n_cores < 2:
        raise ConfigError(f"the {workload.value} workload needs at least 2 cores")
    if workload is VerifyWorkload.MWAIT_CASCADE:
        if adapter is not AdapterKind.COLIBRI:
            raise ConfigError("the mwait-cascade workload needs the colibri adapter")
        waiters = CoreProgram(
            cores=_span(0, last - 1), kind=ProgramKind.MWAIT_ONCE, target_addresses=[0], expected=0
        )
        return RunConfig(sim=sim, programs=[waiters, writer()])
    if workload is VerifyWorkload.ROGUE_SCWAIT:
        if not adapter.supports_lrwait:
            raise ConfigError(
                f"the rogue-scwait workload needs LRwait support, not {adapter.value}"
            )
        rogue = CoreProgram(cores="0", kind=ProgramKind.ROGUE_SCWAIT, target_addresses=[0])
        return RunConfig(sim=sim, programs=[rogue, increments(_span(1, last))])
    return RunConfig(sim=sim, programs=[increments(_span(0, last - 1)), writer()])


class _Pruned(Exception):
    """The run reached a state another branch already covers."""


class _StateBudgetExceeded(Exception):
    pass


class _BranchingDelays:
    """Delay chooser that follows a prefix and then branches at every new state."""

    def __init__(self, explorer: "Explorer", prefix: tuple[int, ...]):
        self.explorer = explorer
        self.prefix = prefix
        self.taken: list[int] = []

    def __call__(
        self, sim: Simulator, source: Endpoint, destination: Endpoint, message: MemoryMessage
    ) -> int:
        position = len(self.taken)
        if position < len(self.prefix):
            delay = self.prefix[position]
        else:
            delay = self.explorer.branch(sim, self.taken)
        self.taken.append(delay)
        return delay


class Explorer:
    """Depth-first search over message latencies for one adapter."""

    def __init__(self, config: ExplorationConfig, adapter: Optional[AdapterKind] = None):
        self.config = config
        self.adapter = adapter or config.adapter
        self.mutations: tuple[Mutation, ...] = (config.mutation,) if config.mutation else ()
        self.run = exploration_run(config, self.adapter)
        self.visited: set[tuple] = set()
        self.violations: dict[Property, tuple[str, Trace]] = {}
        self.outcomes: dict[tuple, Trace] = {}
        self.runs = 0
        self.terminals = 0
        self.pruned = 0
        self.inconclusive = False
        self._stack: list[tuple[int, ...]] = []

    def branch(self, sim: Simulator, taken: list[int]) -> int:
        """Register a new choice point; returns the latency to follow now."""
        key = sim.fingerprint()
        if key in self.visited:
            raise _Pruned()
        if len(self.visited) >= self.config.max_states:
            raise _StateBudgetExceeded()
        self.visited.add(key)
        first, *others = self.config.delay_choices
        for delay in reversed(others):
            self._stack.append((*taken, delay))
        return first

    def explore(self) -> "Explorer":
        logger.info(
            "exploring %s on %s with %d cores", self.config.workload.value, self.adapter.value,
            self.config.n_cores,
        )
        self._stack = [()]
        while self._stack:
            prefix = self._stack.pop()
            try:
                self._run(prefix)
            except _StateBudgetExceeded:
                self.inconclusive = True
                logger.warning("state budget of %d exhausted", self.config.max_states)
                break
        logger.info(
            "explored %d states in %d runs, %d terminals", len(self.visited), self.runs,
            self.terminals,
        )
        return self

    def _run(self, prefix: tuple[int, ...]) -> None:
        self.runs += 1
        chooser = _BranchingDelays(self, prefix)
        tracer = TraceRecorder()
        sim = build_simulator(
            self.run,
            delay_chooser=chooser,
            tracer=tracer,
            monitor=ProtocolMonitor(),
            mutations=self.mutations,
        )
        try:
            result = sim.run_until_quiescent()
        except _Pruned:
            self.pruned += 1
            return
        except ProtocolViolation as e:
            self._violation(e.prop, e.message, self._partial_trace(sim, tracer, chooser))
            return
        except SimulationError as e:
            trace = self._partial_trace(sim, tracer, chooser)
            self._violation(Property.NO_LOST_WAKEUP, str(e), trace)
            return
        self.terminals += 1
        trace = result.trace
        trace.config = trace_header(self.run, delays=chooser.taken, mutations=self.mutations)
        for prop, detail in self.terminal_checks(sim, result):
            self._violation(prop, detail, trace)
        for prop in (Property.MUTUAL_EXCLUSION, Property.FIFO_SERVICE, Property.NO_LOST_WAKEUP):
            verdict = check_trace(trace, prop)
            if not verdict.holds:
                self._violation(prop, verdict.detail, trace)
        self.outcomes.setdefault(outcome_signature(result), trace)

    def _partial_trace(
        self, sim: Simulator, tracer: TraceRecorder, chooser: _BranchingDelays
    ) -> Trace:
        return Trace(
            records=list(tracer.records),
            config=trace_header(self.run, delays=chooser.taken, mutations=self.mutations),
            outcome=VIOLATION_OUTCOME,
            cycles=sim.now,
        )

    def _violation(self, prop: Property, detail: str, trace: Trace) -> None:
        if prop not in self.violations:
            logger.debug("%s violated: %s", prop.value, detail)
            self.violations[prop] = (detail, trace)

    def terminal_checks(self, sim: Simulator, result: RunResult) -> list[tuple[Property, str]]:
        """Properties judged on the final state of a run that ran to its end."""
        found: list[tuple[Property, str]] = []
        unfinished = [core.id for core in sim.cores if core.state.finish_cycle is None]
        if result.outcome is RunOutcome.DEADLOCK:
            found.append(
                (
                    Property.DEADLOCK_FREE,
                    f"no events left at cycle {result.cycles}; cores {unfinished} stuck",
                )
            )
            pending = sim.monitor.pending_waiters()
            if pending:
                found.append((Property.NO_LOST_WAKEUP, f"waiters never answered: {pending}"))
            return found
        if result.outcome is RunOutcome.BUDGET_EXHAUSTED:
            found.append(
                (Property.STARVATION_FREE, f"cycle budget spent with cores {unfinished} unfinished")
            )
            return found
        for core in sim.cores:
            if core.background:
                continue
            quota = core.program.iterations or 0
            if core.state.gave_up or core.state.ops_completed < quota:
                found.append(
                    (
                        Property.STARVATION_FREE,
                        f"core {core.id} completed {core.state.ops_completed} of {quota} "
                        f"operations and gave up {core.state.gave_up}",
                    )
                )
                break
        workload = self.config.workload
        if workload in (VerifyWorkload.INCREMENTS, VerifyWorkload.ROGUE_SCWAIT):
            commits = Counter(address for state in result.cores for address, _ in state.committed)
            for address in range(self.config.addresses):
                expected = commits[address]
                actual = result.memory.get(address, 0)
                if actual != expected:
                    found.append(
                        (
                            Property.ATOMICITY_ORACLE,
                            f"address {address} holds {actual} after {expected} "
                            "committed increments",
                        )
                    )
        if workload is VerifyWorkload.MWAIT_CASCADE:
            stored = result.memory.get(0, 0)
            for core in sim.cores:
                if core.program.kind is not ProgramKind.MWAIT_ONCE:
                    continue
                if core.state.results != [("mwait", stored)]:
                    found.append(
                        (
                            Property.NO_LOST_WAKEUP,
                            f"core {core.id} woke with {core.state.results}, expected one "
                            f"response carrying {stored}",
                        )
                    )
        return found

    def verdicts(self, props: Iterable[Property] = EXPLORED_PROPERTIES) -> list[Verdict]:
        out = []
        for prop in props:
            if prop in self.violations:
                detail, trace = self.violations[prop]
                out.append(Verdict(prop, False, trace, detail))
            else:
                out.append(Verdict(prop, True, inconclusive=self.inconclusive))
        return out


def outcome_signature(result: RunResult) -> tuple:
    """Final memory and the (core, address, value) of every committed update."""
    observed = sorted(
        (state.core, address, value)
        for state in result.cores
        for address, value in state.committed
    )
    return (
        result.outcome.value,
        tuple(sorted(result.memory.items())),
        tuple(observed),
    )


def _compare_outcomes(colibri: Explorer, ideal: Explorer) -> Verdict:
    prop = Property.COLIBRI_EQUALS_IDEAL
    inconclusive = colibri.inconclusive or ideal.inconclusive
    if inconclusive:
        return Verdict(prop, True, detail="an exploration hit its state budget", inconclusive=True)
    only_colibri = sorted(set(colibri.outcomes) - set(ideal.outcomes))
    only_ideal = sorted(set(ideal.outcomes) - set(colibri.outcomes))
    if only_colibri:
        return Verdict(
            prop, False, colibri.outcomes[only_colibri[0]],
            f"colibri reaches {only_colibri[0]} which the ideal queue never does",
        )
    if only_ideal:
        return Verdict(
            prop, False, ideal.outcomes[only_ideal[0]],
            f"the ideal queue reaches {only_ideal[0]} which colibri never does",
        )
    return Verdict(
        prop, True, detail=f"{len(colibri.outcomes)} distinct outcomes"
    )


def explore(config: ExplorationConfig) -> ExplorationResult:
    """Visit every delivery interleaving of ``config`` and judge each property."""
    explorer = Explorer(config).explore()
    verdicts = explorer.verdicts()
    compare = (
        config.compare_with_ideal
        and config.adapter is AdapterKind.COLIBRI
        and config.workload is not VerifyWorkload.MWAIT_CASCADE
    )
    if compare:
        reference = config.model_copy(update={"mutation": None})
        ideal = Explorer(reference, AdapterKind.LRSCWAIT_IDEAL).explore()
        verdicts.append(_compare_outcomes(explorer, ideal))
    return ExplorationResult(
        config=config,
        adapter=explorer.adapter,
        verdicts=verdicts,
        runs=explorer.runs,
        states=len(explorer.visited),
        terminals=explorer.terminals,
        pruned=explorer.pruned,
        inconclusive=explorer.inconclusive,
    )


# -- mutation suite ------------------------------------------------------------------


@dataclass(frozen=True)
class MutationCase:
    mutation: Mutation
    workload: VerifyWorkload
    n_cores: int
    expected: Property


MUTATION_CASES = (
    MutationCase(
        Mutation.DROP_SUCCESSOR_UPDATE, VerifyWorkload.INCREMENTS, 2, Property.NO_LOST_WAKEUP
    ),
    MutationCase(
        Mutation.SKIP_HEAD_INVALIDATION, VerifyWorkload.ROGUE_SCWAIT, 2, Property.MUTUAL_EXCLUSION
    ),
    # with two cores the tail is always the right successor
    MutationCase(
        Mutation.WAKE_WRONG_SUCCESSOR, VerifyWorkload.INCREMENTS, 3, Property.FIFO_SERVICE
    ),
    MutationCase(Mutation.DOUBLE_RESPONSE, VerifyWorkload.INCREMENTS, 2, Property.NO_LOST_WAKEUP),
    MutationCase(
        Mutation.FORGET_STORE_INVALIDATION,
        VerifyWorkload.STORE_INTERFERENCE,
        2,
        Property.ATOMICITY_ORACLE,
    ),
)


@dataclass
class MutationOutcome:
    case: MutationCase
    result: ExplorationResult

    @property
    def caught(self) -> bool:
        return not self.result.holds

    @property
    def failed_properties(self) -> list[Property]:
        return [verdict.prop for verdict in self.result.failed()]


def mutation_config(
    case: MutationCase, base: Optional[ExplorationConfig] = None
) -> ExplorationConfig:
    base = base or ExplorationConfig()
    return base.model_copy(
        update={
            "adapter": AdapterKind.COLIBRI,
            "workload": case.workload,
            "n_cores": max(base.n_cores, case.n_cores),
            "addresses": 1,
            "mutation": case.mutation,
            "compare_with_ideal": False,
        }
    )


def run_mutation_suite(
    base: Optional[ExplorationConfig] = None, mutations: Optional[Sequence[Mutation]] = None
) -> list[MutationOutcome]:
    """Explore every seeded protocol bug; each must break at least one property."""
    outcomes = []
    for case in MUTATION_CASES:
        if mutations is not None and case.mutation not in mutations:
            continue
        result = explore(mutation_config(case, base))
        outcome = MutationOutcome(case, result)
        if not outcome.caught:
            logger.warning("mutation %s went undetected", case.mutation.value)
        outcomes.append(outcome)
    return outcomes


# -- trace oracles -------------------------------------------------------------------


def _seq(record: TraceRecord) -> int:
    return record.get_int("seq")


def _messages(trace: Trace, kinds: Iterable[MsgKind]) -> list[TraceRecord]:
    names = {kind.value for kind in kinds}
    return [record for record in trace.records if record.is_message and record.kind in names]


def _fail(prop: Property, trace: Trace, detail: str) -> Verdict:
    return Verdict(prop, False, trace, detail)


def _pair_by_core(
    requests: list[TraceRecord], responses: list[TraceRecord]
) -> list[tuple[TraceRecord, Optional[TraceRecord]]]:
    """Match the i-th request of a core on an address with its i-th response."""
    answers: dict[tuple[int, int], list[TraceRecord]] = defaultdict(list)
    for record in sorted(responses, key=_seq):
        answers[(record.get_int("core"), record.get_int("address"))].append(record)
    seen: Counter = Counter()
    pairs = []
    for request in requests:
        key = (request.get_int("core"), request.get_int("address"))
        index = seen[key]
        seen[key] += 1
        queue = answers.get(key, [])
        pairs.append((request, queue[index] if index < len(queue) else None))
    return pairs


def _check_mutual_exclusion(trace: Trace) -> Verdict:
    prop = Property.MUTUAL_EXCLUSION
    holder: dict[int, int] = {}
    for record in sorted(_messages(trace, (MsgKind.LRWAIT_RESP, MsgKind.SCWAIT_RESP)), key=_seq):
        address, core = record.get_int("address"), record.get_int("core")
        if record.kind == MsgKind.LRWAIT_RESP.value:
            current = holder.get(address)
            if current is not None and current != core:
                return _fail(
                    prop, trace,
                    f"address {address} granted to core {core} at cycle {record.cycle} "
                    f"while core {current} holds it",
                )
            holder[address] = core
        elif holder.get(address) == core:
            del holder[address]
    return Verdict(prop, True)


def _check_fifo(trace: Trace) -> Verdict:
    prop = Property.FIFO_SERVICE
    requests = _messages(trace, (MsgKind.LRWAIT_REQ, MsgKind.MWAIT_REQ))
    responses = _messages(trace, (MsgKind.LRWAIT_RESP, MsgKind.MWAIT_RESP, MsgKind.FAIL_RESP))
    arrivals: dict[int, list[int]] = defaultdict(list)
    served: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for request, response in _pair_by_core(requests, responses):
        if response is None or response.kind == MsgKind.FAIL_RESP.value:
            continue
        address, core = request.get_int("address"), request.get_int("core")
        arrivals[address].append(core)
        served[address].append((_seq(response), core))
    for address, order in arrivals.items():
        grants = [core for _, core in sorted(served[address])]
        if grants != order:
            return _fail(
                prop, trace,
                f"address {address} queued cores {order} but served them as {grants}",
            )
    return Verdict(prop, True)


def _check_lost_wakeup(trace: Trace) -> Verdict:
    prop = Property.NO_LOST_WAKEUP
    requests = Counter(
        (r.get_int("core"), r.get_int("address"))
        for r in _messages(trace, (MsgKind.LRWAIT_REQ, MsgKind.MWAIT_REQ))
    )
    answers = Counter(
        (r.get_int("core"), r.get_int("address"))
        for r in _messages(trace, (MsgKind.LRWAIT_RESP, MsgKind.MWAIT_RESP, MsgKind.FAIL_RESP))
    )
    for key in sorted(set(requests) | set(answers)):
        core, address = key
        if answers[key] > requests[key]:
            return _fail(
                prop, trace,
                f"core {core} got {answers[key]} responses to {requests[key]} waits "
                f"on address {address}",
            )
        finished = trace.outcome in (RunOutcome.COMPLETED.value, RunOutcome.DEADLOCK.value)
        if finished and answers[key] < requests[key]:
            return _fail(
                prop, trace,
                f"core {core} never got an answer to {requests[key] - answers[key]} waits "
                f"on address {address}",
            )
    return Verdict(prop, True)


def _check_atomicity(trace: Trace) -> Verdict:
    """No write lands between a grant and its commit, and commits chain their values."""
    prop = Property.ATOMICITY_ORACLE
    commit_requests = _messages(trace, (MsgKind.SCWAIT_REQ, MsgKind.SC_REQ))
    commit_responses = _messages(trace, (MsgKind.SCWAIT_RESP,))
    grants: dict[int, list[TraceRecord]] = defaultdict(list)
    for record in _messages(trace, (MsgKind.LRWAIT_RESP,)):
        grants[record.get_int("address")].append(record)
    writes: dict[int, list[int]] = defaultdict(list)
    for record in _messages(trace, (MsgKind.STORE_ACK, MsgKind.AMO_RESP)):
        writes[record.get_int("address")].append(_seq(record))
    commits: dict[int, list[tuple[int, int, int]]] = defaultdict(list)
    for request, response in _pair_by_core(commit_requests, commit_responses):
        if response is not None and response.get_int("value") == 0:
            commits[request.get_int("address")].append(
                (_seq(response), request.get_int("core"), request.get_int("value"))
            )
    final = {
        record.get_int("address"): record.get_int("value")
        for record in trace.records
        if record.kind == "Memory"
    }
    for address, done in commits.items():
        done.sort()
        chain = 0
        chained = not writes[address]
        for seq, core, written in done:
            granted = [g for g in grants[address] if g.get_int("core") == core and _seq(g) < seq]
            if not granted:
                chained = False
                continue
            grant = max(granted, key=_seq)
            between = [w for w in writes[address] if _seq(grant) < w < seq]
            between += [s for s, c, _ in done if c != core and _seq(grant) < s < seq]
            if between:
                return _fail(
                    prop, trace,
                    f"core {core} committed to address {address} after a write "
                    "that followed its grant",
                )
            if chained and grant.get_int("value") != chain:
                return _fail(
                    prop, trace,
                    f"core {core} loaded {grant.get_int('value')} from address {address} "
                    f"but the last commit wrote {chain}",
                )
            chain = written
        if chained and address in final and final[address] != chain:
            return _fail(
                prop, trace,
                f"address {address} ends at {final[address]} but the last commit wrote {chain}",
            )
    return Verdict(prop, True)


def _cores_of(trace: Trace) -> int:
    try:
        return int(trace.config["run"]["sim"]["n_cores"])
    except (KeyError, TypeError):
        names = {r.source for r in trace.records if r.source.startswith("core")}
        return len(names)


def _check_starvation(trace: Trace) -> Verdict:
    prop = Property.STARVATION_FREE
    if trace.outcome is None or trace.outcome == VIOLATION_OUTCOME:
        return Verdict(prop, True, detail="trace has no final outcome", inconclusive=True)
    if trace.outcome != RunOutcome.COMPLETED.value:
        return _fail(prop, trace, f"run ended {trace.outcome} at cycle {trace.cycles}")
    done = {r.source: r for r in trace.records if r.kind == "Done"}
    for core in range(_cores_of(trace)):
        record = done.get(str(Endpoint.core(core)))
        if record is None:
            return _fail(prop, trace, f"core {core} never finished")
        if record.get_int("gave_up"):
            return _fail(prop, trace, f"core {core} gave up {record.get_int('gave_up')} operations")
    return Verdict(prop, True)


def _check_deadlock(trace: Trace) -> Verdict:
    prop = Property.DEADLOCK_FREE
    if trace.outcome is None or trace.outcome == VIOLATION_OUTCOME:
        return Verdict(prop, True, detail="trace has no final outcome", inconclusive=True)
    if trace.outcome == RunOutcome.DEADLOCK.value:
        return _fail(prop, trace, f"no events left at cycle {trace.cycles} with work outstanding")
    return Verdict(prop, True)


def check_trace(trace: Trace, prop: Property) -> Verdict:
    """Judge one property on a single recorded run."""
    if prop is Property.MUTUAL_EXCLUSION:
        return _check_mutual_exclusion(trace)
    if prop is Property.FIFO_SERVICE:
        return _check_fifo(trace)
    if prop is Property.NO_LOST_WAKEUP:
        return _check_lost_wakeup(trace)
    if prop is Property.ATOMICITY_ORACLE:
        return _check_atomicity(trace)
    if prop is Property.STARVATION_FREE:
        return _check_starvation(trace)
    if prop is Property.DEADLOCK_FREE:
        return _check_deadlock(trace)
    return Verdict(prop, True, detail="needs an exploration of both adapters", inconclusive=True)


def check_trace_all(trace: Trace) -> list[Verdict]:
    return [check_trace(trace, prop) for prop in EXPLORED_PROPERTIES]


# -- golden traces -------------------------------------------------------------------


def golden_mismatches(trace: Trace, golden: Trace) -> list[str]:
    """Message lines that differ between a run and its golden trace."""
    actual = [record.to_line() for record in trace.message_records()]
    expected = [record.to_line() for record in golden.message_records()]
    out: list[str] = []
    for index in range(max(len(actual), len(expected))):
        want = expected[index] if index < len(expected) else "<missing>"
        got = actual[index] if index < len(actual) else "<missing>"
        if want != got:
            out.append(f"line {index + 1}: expected {want!r}, got {got!r}")
    return out


def summarize(result: ExplorationResult) -> dict[str, Any]:
    return {
        "adapter": result.adapter.value,
        "workload": result.config.workload.value,
        "mutation": result.config.mutation.value if result.config.mutation else None,
        "runs": result.runs,
        "states": result.states,
        "terminals": result.terminals,
        "verdicts": {verdict.prop.value: verdict.status for verdict in result.verdicts},
    }
