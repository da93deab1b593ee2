//! Exact qualification probabilities for the toy format by enumerating every
//! outcome of the 15 pairwise two-leg ties among its six competitors and
//! every draw. Written from the format rules alone.

use super::TOY_TEAMS;

fn two_leg(a: f64, b: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-(2f64).sqrt() * (a - b) / 400.0))
}

#[derive(Clone, Copy)]
struct Team {
    index: usize,
    coefficient: f64,
    elo: f64,
}

/// Both perfect matchings of a 2+2 pot split, each with probability 1/2.
fn matchings(teams: [Team; 4]) -> [[(Team, Team); 2]; 2] {
    let mut sorted = teams;
    sorted.sort_by(|a, b| {
        b.coefficient
            .partial_cmp(&a.coefficient)
            .unwrap()
            .then(b.elo.partial_cmp(&a.elo).unwrap())
            .then(a.index.cmp(&b.index))
    });
    let [s1, s2, u1, u2] = sorted;
    [[(s1, u1), (s2, u2)], [(s1, u2), (s2, u1)]]
}

/// Probability of qualifying, indexed like `TOY_TEAMS` (rank-1 team included).
pub fn exact_probabilities() -> Vec<f64> {
    let teams: Vec<Team> = TOY_TEAMS
        .iter()
        .enumerate()
        .map(|(index, t)| Team { index, coefficient: t.2.parse().unwrap(), elo: t.3 })
        .collect();
    let competitors: Vec<usize> = (1..7).collect();
    let pairs: Vec<(usize, usize)> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).collect();
    assert_eq!(pairs.len(), 15);

    let mut p = vec![0.0; teams.len()];
    p[0] = 1.0;
    for mask in 0u32..(1 << pairs.len()) {
        // beats[x][y]: competitor x beats competitor y under this outcome.
        let mut beats = [[false; 6]; 6];
        let mut weight = 1.0;
        for (bit, &(i, j)) in pairs.iter().enumerate() {
            let pij = two_leg(teams[competitors[i]].elo, teams[competitors[j]].elo);
            if mask >> bit & 1 == 1 {
                beats[i][j] = true;
                weight *= pij;
            } else {
                beats[j][i] = true;
                weight *= 1.0 - pij;
            }
        }
        let slot = |t: &Team| competitors.iter().position(|&c| c == t.index).unwrap();
        let play = |a: Team, b: Team| -> Team {
            let winner = if beats[slot(&a)][slot(&b)] { a } else { b };
            Team { coefficient: a.coefficient.max(b.coefficient), ..winner }
        };
        let q1 = [teams[3], teams[4], teams[5], teams[6]];
        for q1_draw in matchings(q1) {
            let w1 = play(q1_draw[0].0, q1_draw[0].1);
            let w2 = play(q1_draw[1].0, q1_draw[1].1);
            for q2_draw in matchings([teams[1], teams[2], w1, w2]) {
                for (a, b) in q2_draw {
                    let winner = if beats[slot(&a)][slot(&b)] { a } else { b };
                    p[winner.index] += weight * 0.25;
                }
            }
        }
    }
    p
}
