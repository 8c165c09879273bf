#!/usr/bin/env python3
"""Generate a synthetic minute-resolution household power trace in the UCI
"Individual household electric power consumption" layout.

The trace is deterministic for a given seed. It mixes a slowly drifting base
load, a daily occupancy profile, a cycling refrigerator compressor and a set of
appliances with characteristic power levels and durations (kettle, oven,
washing machine, dishwasher, lighting/TV, water heater). A handful of
missing-value rows (`?`) are injected the way the UCI file has them: whole
records with every measurement missing.

Usage: synth_household.py [--rows 20000] [--seed 20061216] [--out FILE]
"""

import argparse
import datetime as dt
import math
import random


def daily_activity(minute_of_day):
    """Relative appliance usage intensity over a day (0 = asleep)."""
    h = minute_of_day / 60.0
    morning = math.exp(-((h - 7.5) / 1.2) ** 2)
    midday = 0.35 * math.exp(-((h - 13.0) / 1.5) ** 2)
    evening = 1.1 * math.exp(-((h - 19.5) / 2.0) ** 2)
    night = 0.03
    return night + morning + midday + evening


APPLIANCES = [
    # name, rate per active hour, (kw_lo, kw_hi), (minutes_lo, minutes_hi)
    ("kettle", 0.55, (1.9, 2.3), (2, 5)),
    ("oven", 0.12, (1.2, 2.6), (20, 70)),
    ("washer", 0.05, (0.35, 0.6), (50, 90)),
    ("dishwasher", 0.05, (0.15, 0.3), (60, 110)),
    ("lights_tv", 0.30, (0.08, 0.35), (40, 200)),
    ("heater", 0.10, (0.9, 1.4), (15, 45)),
]


class Trace:
    def __init__(self, rows, seed):
        self.rng = random.Random(seed)
        self.rows = rows

    def generate(self):
        rng = self.rng
        start = dt.datetime(2006, 12, 16, 17, 24, 0)
        start_minute = start.hour * 60 + start.minute

        base = 0.25
        fridge_phase = 0
        fridge_on = 14
        fridge_off = 22
        active = []  # (end_minute, profile function)
        samples = []

        for t in range(self.rows):
            mod = (start_minute + t) % 1440
            act = daily_activity(mod)

            base += 0.002 * (0.25 - base) + rng.gauss(0.0, 0.0015)
            base = min(max(base, 0.12), 0.45)

            fridge_phase = (fridge_phase + 1) % (fridge_on + fridge_off)
            fridge = 0.11 if fridge_phase < fridge_on else 0.0
            if fridge_phase == 0:
                fridge_on = rng.randint(12, 17)
                fridge_off = rng.randint(18, 28)

            for name, rate, (lo, hi), (dlo, dhi) in APPLIANCES:
                if rng.random() < rate * act / 60.0:
                    level = rng.uniform(lo, hi)
                    duration = rng.randint(dlo, dhi)
                    active.append(self._profile(name, t, duration, level))

            load = base + fridge + 0.05 * act
            still = []
            for end, fn in active:
                if t < end:
                    load += fn(t)
                    still.append((end, fn))
            active = still

            load *= 1.0 + rng.gauss(0.0, 0.015)
            samples.append(max(load, 0.076))

        return start, samples

    def _profile(self, name, t0, duration, level):
        rng = self.rng
        if name == "washer":
            heat_from = rng.randint(3, 8)
            heat_len = rng.randint(12, 20)

            def fn(t):
                k = t - t0
                if heat_from <= k < heat_from + heat_len:
                    return 2.0 + level
                return level * (0.6 + 0.4 * math.sin(k / 3.0) ** 2)

            return t0 + duration, fn
        if name == "oven":

            def fn(t):
                k = t - t0
                # thermostat cycling once preheated
                if k < 12:
                    return level
                return level if (k // 4) % 2 == 0 else 0.15 * level

            return t0 + duration, fn
        if name == "dishwasher":
            heat_from = rng.randint(10, 20)

            def fn(t):
                k = t - t0
                if heat_from <= k < heat_from + 15:
                    return 1.9
                return level

            return t0 + duration, fn
        return t0 + duration, (lambda t: level)


def write_uci(path, start, samples, rng):
    missing = set()
    # isolated gaps and one longer outage, never at the very start
    for _ in range(6):
        missing.add(rng.randint(100, len(samples) - 1))
    gap = rng.randint(len(samples) // 2, len(samples) - 200)
    missing.update(range(gap, gap + 9))

    with open(path, "w", newline="\n") as out:
        out.write(
            "Date;Time;Global_active_power;Global_reactive_power;Voltage;"
            "Global_intensity;Sub_metering_1;Sub_metering_2;Sub_metering_3\n"
        )
        for i, p in enumerate(samples):
            ts = start + dt.timedelta(minutes=i)
            date = f"{ts.day}/{ts.month}/{ts.year}"
            time = ts.strftime("%H:%M:%S")
            if i in missing:
                out.write(f"{date};{time};?;?;?;?;?;?;\n")
                continue
            reactive = 0.05 + 0.08 * rng.random() + 0.02 * p
            voltage = 240.0 - 1.5 * p + rng.gauss(0.0, 0.8)
            intensity = p * 1000.0 / voltage
            sub1 = 0.0
            sub2 = 1.0 if p > 0.6 and rng.random() < 0.3 else 0.0
            sub3 = 17.0 if p > 1.0 and rng.random() < 0.4 else 0.0
            out.write(
                f"{date};{time};{p:.3f};{reactive:.3f};{voltage:.2f};"
                f"{intensity:.1f};{sub1:.3f};{sub2:.3f};{sub3:.0f}\n"
            )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=20061216)
    ap.add_argument("--out", default="data/household_power_fixture.txt")
    args = ap.parse_args()

    trace = Trace(args.rows, args.seed)
    start, samples = trace.generate()
    write_uci(args.out, start, samples, trace.rng)


if __name__ == "__main__":
    main()
