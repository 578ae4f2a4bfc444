use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::Distribution;

use crate::model::{NetworkConfig, PopularityProfile};

use super::scene::poisson;
use super::SpatialError;

/// Column header of the request-log text format.
pub const LOG_HEADER: &str = "user_id,timestamp_s,file_index";

/// One request: arrival time in seconds and file index (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Request {
    pub time: f64,
    pub file: usize,
}

/// Requests collected by the BS over `[0, tau]`, grouped by user and sorted
/// by time within each user. Users that made no request still count.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestLog {
    pub tau: f64,
    pub users: Vec<Vec<Request>>,
}

impl RequestLog {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn total_requests(&self) -> u64 {
        self.users.iter().map(|u| u.len() as u64).sum()
    }

    pub fn requests(&self) -> impl Iterator<Item = &Request> {
        self.users.iter().flatten()
    }

    /// Per-file request counts. Files at or beyond `n` are an error.
    pub fn counts(&self, n: usize) -> Result<Vec<u64>, SpatialError> {
        let mut counts = vec![0u64; n];
        for r in self.requests() {
            *counts.get_mut(r.file).ok_or_else(|| {
                SpatialError::InvalidArgument(format!(
                    "file index {} outside catalog of {n}",
                    r.file + 1
                ))
            })? += 1;
        }
        Ok(counts)
    }

    /// Writes the line format `user_id,timestamp_s,file_index` (file index
    /// 1-based) preceded by `# tau_s=` and `# users=` metadata lines.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# tau_s={}", self.tau)?;
        writeln!(out, "# users={}", self.users.len())?;
        writeln!(out, "{LOG_HEADER}")?;
        for (uid, reqs) in self.users.iter().enumerate() {
            for r in reqs {
                writeln!(out, "{uid},{},{}", r.time, r.file + 1)?;
            }
        }
        out.flush()
    }

    /// Parses the line format. The header and metadata lines are optional;
    /// without them `tau` is the latest timestamp and the user count is the
    /// largest user id plus one.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self, SpatialError> {
        let mut tau: Option<f64> = None;
        let mut declared_users: Option<usize> = None;
        let mut users: Vec<Vec<Request>> = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(meta) = text.strip_prefix('#') {
                let meta = meta.trim();
                if let Some(v) = meta.strip_prefix("tau_s=") {
                    tau = Some(parse_field(v, lineno, "tau_s")?);
                } else if let Some(v) = meta.strip_prefix("users=") {
                    declared_users = Some(parse_field(v, lineno, "users")?);
                }
                continue;
            }
            if text.starts_with("user_id") {
                continue;
            }
            let fields: Vec<&str> = text.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(SpatialError::Parse {
                    line: lineno,
                    msg: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let uid: usize = parse_field(fields[0], lineno, "user_id")?;
            let time: f64 = parse_field(fields[1], lineno, "timestamp_s")?;
            let file: usize = parse_field(fields[2], lineno, "file_index")?;
            if !(time.is_finite() && time >= 0.0) {
                return Err(SpatialError::Parse {
                    line: lineno,
                    msg: format!("timestamp {time} must be finite and >= 0"),
                });
            }
            if file == 0 {
                return Err(SpatialError::Parse {
                    line: lineno,
                    msg: "file_index is 1-based".into(),
                });
            }
            if users.len() <= uid {
                users.resize_with(uid + 1, Vec::new);
            }
            users[uid].push(Request {
                time,
                file: file - 1,
            });
        }
        if let Some(n) = declared_users {
            if n < users.len() {
                return Err(SpatialError::Parse {
                    line: 0,
                    msg: format!("declared {n} users but found id {}", users.len() - 1),
                });
            }
            users.resize_with(n, Vec::new);
        }
        let latest = users
            .iter()
            .flatten()
            .map(|r| r.time)
            .fold(0.0_f64, f64::max);
        let tau = tau.unwrap_or(latest);
        if latest > tau {
            return Err(SpatialError::Parse {
                line: 0,
                msg: format!("timestamp {latest} exceeds tau {tau}"),
            });
        }
        for reqs in &mut users {
            reqs.sort_by(|a, b| a.time.total_cmp(&b.time));
        }
        Ok(Self { tau, users })
    }

    pub fn save(&self, path: &Path) -> Result<(), SpatialError> {
        self.write_to(BufWriter::new(File::create(path)?))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SpatialError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> Result<T, SpatialError>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse().map_err(|e| SpatialError::Parse {
        line,
        msg: format!("{name}: {e}"),
    })
}

/// Simulates the BS collection window `[0, tau]`: a Poisson(λ_u π R²) number
/// of users, each issuing a Poisson(λ_r τ) number of requests at uniform
/// times with files drawn i.i.d. from `profile`.
pub fn generate_requests<R: Rng + ?Sized>(
    config: &NetworkConfig,
    profile: &PopularityProfile,
    tau: f64,
    rng: &mut R,
) -> Result<RequestLog, SpatialError> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(SpatialError::InvalidArgument(format!(
            "tau must be finite and >= 0 (got {tau})"
        )));
    }
    let die = WeightedIndex::new(profile.as_slice()).expect("profile is on the simplex");
    let n_users = poisson(config.mean_users(), rng) as usize;
    let per_user = config.lambda_r * tau;
    let users = (0..n_users)
        .map(|_| {
            let k = poisson(per_user, rng);
            let mut reqs: Vec<Request> = (0..k)
                .map(|_| Request {
                    time: tau * rng.random::<f64>(),
                    file: die.sample(rng),
                })
                .collect();
            reqs.sort_by(|a, b| a.time.total_cmp(&b.time));
            reqs
        })
        .collect();
    Ok(RequestLog { tau, users })
}

/// `count` i.i.d. file indices (0-based) from `profile`.
pub fn sample_files<R: Rng + ?Sized>(
    profile: &PopularityProfile,
    count: usize,
    rng: &mut R,
) -> Vec<usize> {
    let die = WeightedIndex::new(profile.as_slice()).expect("profile is on the simplex");
    (0..count).map(|_| die.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_window_has_users_but_no_requests() {
        let cfg = NetworkConfig::default();
        let p = PopularityProfile::uniform(10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let log = generate_requests(&cfg, &p, 0.0, &mut rng).unwrap();
        assert!(log.n_users() > 10_000);
        assert_eq!(log.total_requests(), 0);
    }

    #[test]
    fn point_mass_profile_requests_one_file() {
        let cfg = NetworkConfig {
            coverage_radius: 300.0,
            ..Default::default()
        };
        let p = PopularityProfile::point_mass(5, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let log = generate_requests(&cfg, &p, 3600.0, &mut rng).unwrap();
        assert!(log.total_requests() > 0);
        assert!(log.requests().all(|r| r.file == 2));
        let mut text = Vec::new();
        log.write_to(&mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.lines().skip(3).all(|l| l.ends_with(",3")));
    }

    #[test]
    fn timestamps_sorted_and_within_window() {
        let cfg = NetworkConfig {
            coverage_radius: 200.0,
            ..Default::default()
        };
        let p = PopularityProfile::uniform(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let log = generate_requests(&cfg, &p, 7200.0, &mut rng).unwrap();
        for u in &log.users {
            assert!(u.windows(2).all(|w| w[0].time <= w[1].time));
            assert!(u.iter().all(|r| (0.0..=7200.0).contains(&r.time)));
        }
    }

    #[test]
    fn text_round_trip_preserves_log() {
        let log = RequestLog {
            tau: 10.5,
            users: vec![
                vec![Request { time: 0.1, file: 0 }, Request { time: 3.25, file: 2 }],
                vec![],
                vec![Request { time: 10.5, file: 1 }],
                vec![],
            ],
        };
        let mut buf = Vec::new();
        log.write_to(&mut buf).unwrap();
        let back = RequestLog::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn headerless_input_is_accepted() {
        let log = RequestLog::read_from("3,1.5,2\n0,0.5,1\n3,0.25,1\n".as_bytes()).unwrap();
        assert_eq!(log.n_users(), 4);
        assert_eq!(log.tau, 1.5);
        assert_eq!(log.users[3][0].time, 0.25);
        assert_eq!(log.counts(2).unwrap(), vec![2, 1]);
    }

    #[test]
    fn malformed_lines_report_line_number() {
        match RequestLog::read_from("user_id,timestamp_s,file_index\n0,1.0\n".as_bytes()) {
            Err(SpatialError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(RequestLog::read_from("0,1.0,0\n".as_bytes()).is_err());
        assert!(RequestLog::read_from("# tau_s=1\n0,2.0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn counts_reject_out_of_catalog_files() {
        let log = RequestLog::read_from("0,1.0,5\n".as_bytes()).unwrap();
        assert!(log.counts(3).is_err());
        assert_eq!(log.counts(5).unwrap(), vec![0, 0, 0, 0, 1]);
    }
}
