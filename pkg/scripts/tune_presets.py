"""Measure the qualitative indicators each preset is tuned for.

Runs every shipped preset across a handful of seeds and prints the
observed single-message share, zero-NbFgP share, within-24h share and
the fitted trend of per-bucket new users.  Used to pin the `targets`
block inside the preset files; re-run after touching generator params.
"""

from __future__ import annotations

import argparse
from dataclasses import replace

import numpy as np

from diffscope.analytics import distribution, elapsed_summary, field_values
from diffscope.events import SessionConfig
from diffscope.ingest import SessionEngines, run_session
from diffscope.local_metrics import GraphView
from diffscope.synth import generate_cascade_messages, generate_graph_records, list_presets, load_preset


def measure(params) -> dict:
    metas = generate_graph_records(params)
    messages = generate_cascade_messages(metas, params)
    config = SessionConfig(keywords=[params.topic])
    engines = SessionEngines(config=config, graph=GraphView(metas))
    run_session(config, messages, engines)

    pop = engines.local.population()
    g = engines.global_.snapshot()
    nb_msgs = field_values(pop, "nb_messages")
    fgp = field_values(pop, "nb_fg_p")
    new_users = [row["new_users"] for row in engines.global_.bucket_series(engines.start_ms)]
    xs = np.arange(len(new_users))
    trend = float(np.polyfit(xs, new_users, 1)[0]) if len(new_users) >= 2 else 0.0
    return {
        "events": g.nb_tw + g.nb_rtw,
        "users": g.nb_us,
        "single": distribution(pop, "nb_messages").share_at_one,
        "zero_fgp": sum(1 for v in fgp if v == 0) / len(fgp) if fgp else None,
        "within_24h": elapsed_summary(pop).within_24h,
        "nu_trend": trend,
        "single_msg_mean": float(np.mean(nb_msgs)) if nb_msgs else None,
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5, help="extra seeds beyond the shipped one")
    args = ap.parse_args()

    for name in list_presets():
        params, targets = load_preset(name)
        print(f"\n== {name} (shipped seed {params.seed}, targets {targets})")
        rows = []
        for seed in [params.seed] + [params.seed + 1 + i for i in range(args.seeds)]:
            m = measure(replace(params, seed=seed))
            rows.append(m)
            print(
                f"  seed {seed:>3}: events {m['events']:>6} users {m['users']:>5}"
                f"  single {m['single']:.3f}  zero_fgp {m['zero_fgp']:.3f}"
                f"  within_24h {m['within_24h']:.3f}  nu_trend {m['nu_trend']:+.2f}"
            )
        for key in ("single", "zero_fgp", "within_24h"):
            vals = [r[key] for r in rows]
            print(f"  {key:>10}: mean {np.mean(vals):.3f}  min {min(vals):.3f}  max {max(vals):.3f}")


if __name__ == "__main__":
    main()
