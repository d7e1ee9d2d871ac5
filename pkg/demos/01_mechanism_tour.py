"""A walking tour of the four mechanisms on one tiny market.

Three students, three unit-capacity schools.  Student 0 wants school B
most; students 1 and 2 both want school A.  The contested top choice is
what separates the mechanisms.
"""

from schoolmatch import (
    Market,
    deferred_acceptance,
    effective_ranks,
    is_pareto_optimal,
    justified_envy,
    random_serial_dictatorship,
    rank_minimizing,
    rank_stats,
    top_trading_cycles,
)

NAMES = ["A", "B", "C"]

market = Market(
    capacities=(1, 1, 1),
    prefs=(
        (1, 0, 2),  # student 0: B > A > C
        (0, 1, 2),  # student 1: A > B > C
        (0, 1, 2),  # student 2: A > B > C
    ),
    priorities=(
        (0, 2, 1),  # school A: 0 > 2 > 1
        (1, 0, 2),  # school B: 1 > 0 > 2
        (0, 1, 2),  # school C: 0 > 1 > 2
    ),
)


def show(label, allocation):
    ranks = effective_ranks(market, allocation)
    seats = ", ".join(
        f"student {t} -> {NAMES[s]} (rank {ranks[t]})"
        for t, s in enumerate(allocation.assignment)
    )
    stats = rank_stats(market, allocation)
    envy = justified_envy(market, allocation)
    print(f"{label:4s} {seats}")
    print(
        f"     mean rank {stats.mean:.2f}, worst rank {stats.max}, "
        f"envious students {sorted(envy) if envy else 'none'}"
    )


print(__doc__)

da = deferred_acceptance(market)
show("DA", da)
check = is_pareto_optimal(market, da)
print(f"     Pareto optimal? {bool(check)}", end="")
if not check:
    witness_ranks = effective_ranks(market, check.witness)
    print(f"  (dominated: ranks {witness_ranks.tolist()} are attainable)")
else:
    print()
print()

ttc = top_trading_cycles(market)
show("TTC", ttc)
print(f"     Pareto optimal? {bool(is_pareto_optimal(market, ttc))}")
print("     TTC trades student 0's claim at A for student 1's claim at B:")
print("     both land their first choice, but student 2 now has justified envy.")
print()

rm = rank_minimizing(market, seed=7)
show("RM", rm)
print(f"     rank sum {effective_ranks(market, rm).sum()} is the minimum possible")
print()

rsd = random_serial_dictatorship(market, seed=7)
show("RSD", rsd)
print("     (dictator order is seeded; change the seed to see other orders)")
