"""An honest call between alice and bob over a clean voice line.

Runs one exchange per scenario and shows what each user would read aloud.
In (a) the signatures check out, so the SAS comparison is optional; in (b)
and (c) at least one side could not verify a signature and must compare.
"""

from voicekex.harness import ScenarioConfig, run_trial
from voicekex.sas import render_digits, render_words
from voicekex.sim import ALICE, BOB

for seed, scenario in enumerate("abc", start=7):
    run = run_trial(ScenarioConfig(scenario, mode="concrete", seed=seed), 0)
    alice, bob = run.network.parties[ALICE], run.network.parties[BOB]
    print(f"scenario {scenario}: alice={run.record.outcomes[0]} bob={run.record.outcomes[1]}")
    print(f"  alice sees  {' '.join(render_words(alice.state.sas))}  ({render_digits(alice.state.sas)})")
    print(f"  bob sees    {' '.join(render_words(bob.state.sas))}  ({render_digits(bob.state.sas)})")
    print(f"  comparison: alice {alice.state.obligation.name.lower()}, bob {bob.state.obligation.name.lower()}")
    print(f"  read aloud: {'yes' if alice.sas is not None else 'no'}")
    print(f"  same session key: {alice.state.session_key == bob.state.session_key}")
    print(f"  {len(run.network.log)} records on the wire")
    print()
