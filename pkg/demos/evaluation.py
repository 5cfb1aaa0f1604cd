"""Evaluate programs, inspect the trace, and replay it through the rewrite engine."""

from __future__ import annotations

from mettagraph import FuelExhausted, Interpreter, Metagraph, match, parse, replay_trace


def main() -> None:
    interp = Interpreter(Metagraph.load("(= bin 0)\n(= bin 1)\n(= (double $x) ($x $x))\n"))
    print("bin ->", [str(r) for r in interp.eval("bin")])
    print("(double (double a)) ->", [str(r) for r in interp.eval("(double (double a))")])
    print("(+ bin 10) ->", [str(r) for r in interp.eval("(+ bin 10)")])

    interp.load("(: Person Type) (: Ann Person) (: Robot Type)")
    print("Person inhabited:", interp.check_inhabited("Person"), "; Robot inhabited:", interp.check_inhabited("Robot"))

    results, trace = interp.eval_traced("(double bin)")
    print("(double bin) ->", [str(r) for r in results], f"in {len(trace)} trace events")
    print(trace.to_json_lines(), end="")
    steps = match(trace.space, parse("(step $n equality-step $in $out)"))
    print("equality steps found by querying the trace space:", len(steps))
    print("replayed faithfully:", all(ok for _, ok in replay_trace(trace)))

    loop = Interpreter(Metagraph.load("(= (loop $x) (loop (s $x)))"))
    try:
        loop.eval("(loop z)", fuel=25)
    except FuelExhausted as exc:
        print("fuel ran out:", str(exc)[:70], "...")


if __name__ == "__main__":
    main()
