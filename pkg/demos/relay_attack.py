"""A man in the middle relays the call, running one key exchange per side.

Each line is one trial; the relay is caught by signatures when both users
hold each other's cards, and by the spoken SAS otherwise.  In (d) the users
skip the comparison and the relay walks away with the session keys.
"""

from voicekex.adversary import MitmDh
from voicekex.harness import ScenarioConfig, run_trial, screened_indices

for scenario in "abcd":
    cfg = ScenarioConfig(scenario, adversary_script=(MitmDh(),), mode="concrete", seed=11)
    # drop the 1-in-65536 trials where the two relayed SAS values coincide
    index = screened_indices(cfg, 1)[0] if scenario != "d" else 0
    rec = run_trial(cfg, index).record
    print(f"({scenario}) {rec.to_line()}")
