"""Independent brute-force score evaluator used as the test oracle.

Recomputes the risk formula with naive loops over the raw login list:
no incremental counters, no history store, no engine imports.  Kept
deliberately separate from the implementation it checks.
"""

import math

IP_LEVELS = ("ip", "asn", "country")
UA_LEVELS = ("ua_full", "browser", "os", "device_type")
RTT_LEVELS = ("rtt",)


def brute_force_score(attempt, user, logins, config, include_rtt=True,
                      listed_ips=None):
    """Score an attempt against logins (list of (user, values) pairs).

    The caller guarantees the user appears in ``logins``; first logins
    bypass scoring by convention.
    """
    mine = [values for owner, values in logins if owner == user]
    features = [(IP_LEVELS, config.ip_weights), (UA_LEVELS, config.ua_weights)]
    if include_rtt:
        features.append((RTT_LEVELS, (1.0,)))

    score = 1.0
    for levels, weights in features:
        level0 = levels[0]
        target = attempt.get(level0)
        if target is None:
            continue

        user_prob = 0.0
        for level, weight in zip(levels, weights):
            value = attempt.get(level)
            if value is None:
                continue
            matches = 0
            for values in mine:
                if values.get(level) == value:
                    matches += 1
            user_prob += weight * (matches / len(mine))
        if user_prob == 0.0:
            return math.inf

        global_count = 0
        for _, values in logins:
            if values.get(level0) == target:
                global_count += 1
        alpha = config.global_smoothing_alpha
        global_prob = (global_count + alpha) / (len(logins) + alpha)

        if config.attack_data_enabled and level0 == "ip":
            if listed_ips is not None and target in listed_ips:
                attack = config.rep_hit_prob
            else:
                attack = config.rep_miss_prob
        else:
            attack = 1.0

        score *= attack * global_prob / user_prob

    user_logins = 0
    for owner, _ in logins:
        if owner == user:
            user_logins += 1
    return score * config.user_attack_prior / (user_logins / len(logins))
