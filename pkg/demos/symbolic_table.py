"""The security matrix, computed over symbolic terms.

Runs the bundled table1 suite in symbolic mode, then replays one honest
trial and asks the attacker's knowledge closure a few direct questions.
"""

from voicekex.cli import load_suite
from voicekex.harness import ScenarioConfig, adversary_knowledge, run_suite, run_trial
from voicekex.sim import ALICE
from voicekex import symbolic as sym

report = run_suite(load_suite("table1"), mode="symbolic", trials=5)
print(report.to_text().split("\n\n")[0])
print("matches expectation:", report.meets_expectation)
print()

run = run_trial(ScenarioConfig("c", mode="symbolic", seed=2), 0)
key = run.network.parties[ALICE].state.session_key
print("alice's session key:", sym.to_sexpr(key)[:100], "...")
for label, compromise in (("during the call", "none"), ("after long-term keys leak", "post-session")):
    k = adversary_knowledge(run.trace, compromise)
    print(f"  attacker derives it {label}: {key in k}")
