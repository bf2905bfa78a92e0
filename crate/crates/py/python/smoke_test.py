"""Quick check of the compiled extension. Build it first with
`maturin develop --release` from crates/py."""

import json
import math

import hotelnav


def main():
    grid = hotelnav.GridMap.parse("......\n.####.\n......\n")
    costs = set()
    for algo in ("dijkstra", "astar", "dstar"):
        result = hotelnav.plan(grid, (0, 1), (5, 1), algo)
        assert result.found, result
        costs.add(result.cost)
    assert len(costs) == 1, costs

    planner = hotelnav.DStar(grid, (0, 0), (5, 0))
    first = planner.compute()
    repaired = planner.update([(3, 0, math.inf)])
    assert repaired.found and repaired.cost > first.cost

    x, y, theta = hotelnav.step_true((0.0, 0.0, 0.0), 1.0, 1.0, math.pi / 2)
    assert abs(x - 1) < 1e-9 and abs(y - 1) < 1e-9 and abs(theta - math.pi / 2) < 1e-9
    assert abs(hotelnav.tof_to_range(6.6713e-8) - 10.0) < 1e-3
    assert hotelnav.raycast(grid, (0.05, 0.15, 0.0), 0.0, 2.0) is not None

    floor = hotelnav.GridMap.demo_floor(2)
    assert floor.room_door("238") is not None

    summary = json.loads(hotelnav.replay("floor3-320", seeds="0..4"))
    assert summary["runs"] == 4
    assert all(m["transits"] == 1 for m in summary["missions"])

    try:
        hotelnav.replay("floor9-999")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown experiment accepted")

    print("smoke test passed:", repr(grid), first, f"replay success {summary['success_rate']:.2f}")


if __name__ == "__main__":
    main()
