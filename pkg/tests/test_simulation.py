import pytest

from lowspeed import labels as L
from lowspeed import simulation as S
from lowspeed.functionals import PartialFunctionTable
from lowspeed.orchestrator import A_path


def setup(built_pair, e):
    st, fam = built_pair
    ctx = S.SimContext(fam, st.pi, e)
    cover = S.choose_cover(ctx)[0]
    return st, fam, ctx, cover


@pytest.fixture(scope="module")
def s3_l1(s3):
    st, fam, ctx, cover = setup(s3, 1)
    return st, fam, ctx, S.sim_run(ctx, cover, 40)


def test_cover_and_guess(s3):
    st, fam, ctx, cover = setup(s3, 1)
    assert ctx.eta == L.delta(st.pi[:4])
    assert cover == st.pi[3]
    assert [ctx.trees[i].label(cover) for i in range(2)] == [L.TOP, L.TOP]


def test_oracle_agreement_s2(s2):
    _, _, ctx, cover = setup(s2, 0)
    led = S.sim_run(ctx, cover, 40)
    assert S.compare_with_naive(led, ctx).ok


def test_oracle_agreement_and_blocks_s3(s3_l1):
    _, _, ctx, led = s3_l1
    assert led.star_blocks >= 1
    assert S.compare_with_naive(led, ctx).ok


class NoStarRule(S.Simulation):
    """The walk with the waiting rule removed."""

    def _test(self, c, sigma, s, cost):
        proc, c.procedural = c.procedural, False
        try:
            return super()._test(c, sigma, s, cost)
        finally:
            c.procedural = proc


def test_oracle_detects_missing_waiting_rule(s3_l1):
    _, _, ctx, led = s3_l1
    bad = NoStarRule(ctx, led.cover).run(led.stage)
    assert bad.star_blocks == 0
    assert not S.compare_with_naive(bad, ctx).ok


def test_on_tree_and_its_mutation(s3_l1):
    _, _, ctx, led = s3_l1
    assert S.verify_on_tree(led, ctx).ok
    r = min(led.xi)
    led2 = S.SimulationLedger(led.e, led.cover, led.eta, dict(led.xi))
    x = led.xi[r]
    led2.xi[r] = S.XiEntry(x.value + 100, x.stage, x.witness, x.cost)
    assert not S.verify_on_tree(led2, ctx).ok


def test_low_for_speed_and_wrong_R(s1):
    st, fam, ctx, cover = setup(s1, 0)
    led = S.sim_run(ctx, cover, 30)
    A = A_path(st, fam)
    assert S.low_for_speed(led, ctx, A, st.pi[1]).ok
    # a wrong value in the ledger is caught
    r = min(led.xi)
    led.xi[r] = S.XiEntry(led.xi[r].value + 1, 1, "", 0)
    assert not S.low_for_speed(led, ctx, A, st.pi[1]).ok
    assert S.low_for_speed(led, ctx, A, "0").notes == ["skipped: finitary outcome"]


def test_low_for_speed_skips_when_A_disagrees(s1):
    st, fam, ctx, cover = setup(s1, 0)
    led = S.sim_run(ctx, cover, 8)
    A = A_path(st, fam)
    r = ctx.R.domain[0]
    ctx.R = PartialFunctionTable({**ctx.R.values, r: (ctx.R.value(r) + 5, 1)})
    rep = S.low_for_speed(led, ctx, A, L.INFTY)
    assert rep.ok and rep.notes[0].startswith("skipped: Psi^A")


def test_cost_and_delay_bounds(s3_l1):
    st, fam, ctx, led = s3_l1
    A = A_path(st, fam)
    C = S.cost_constant(led)
    assert S.check_cost(led, C).ok
    assert not S.check_cost(led, C / 2).ok
    Cp = S.measured_delay(led, ctx, A)
    assert S.verify_result_watched(led, ctx, A, Cp).ok
    assert not S.verify_result_watched(led, ctx, A, Cp / 4).ok


def test_ledger_rows_and_snapshot(s3_l1):
    _, _, _, led = s3_l1
    rows = led.rows()
    assert len(rows) == len(led.xi)
    r, v, stage, w, cost = rows[0].split("\t")
    assert int(stage) >= 1 and int(cost) >= 0
    snap = led.snapshot()
    assert snap["rows"] == rows and len(snap["costs"]) == led.stage == len(snap["passing"])


def test_insufficient_depth(s2):
    st, fam = s2
    with pytest.raises(S.InsufficientDepth):
        S.SimContext(fam, st.pi[:1], 1)
