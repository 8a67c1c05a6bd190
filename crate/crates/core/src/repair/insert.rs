//! Applying staged candidates to source text, and unified diffs.

use super::{RepairCandidate, RepairError};

/// Result of applying one or more candidates to a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patched {
    pub text: String,
    /// First and last line of each candidate's guard block in `text`, in
    /// input order.
    pub guard_lines: Vec<(u32, u32)>,
    /// Byte range of each candidate's guard block in `text`.
    pub guard_spans: Vec<(usize, usize)>,
}

impl Patched {
    /// Candidates paired with their guard byte ranges, for revalidation.
    pub fn applied<'c>(&self, candidates: &[&'c RepairCandidate]) -> Vec<(&'c RepairCandidate, (usize, usize))> {
        candidates.iter().copied().zip(self.guard_spans.iter().copied()).collect()
    }
}

struct Splice<'a> {
    start: usize,
    end: usize,
    text: &'a str,
    owner: Option<usize>,
}

/// Apply candidates together. Each handler definition is injected once and
/// not at all when the file already contains it.
pub fn apply_candidates(source: &str, candidates: &[&RepairCandidate]) -> Result<Patched, RepairError> {
    let mut splices = Vec::new();
    let mut preludes: Vec<&str> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let e = &c.edit;
        if source.get(e.start..e.end) != Some(e.original.as_str()) {
            return Err(RepairError::SpanDrift {
                problem_id: c.problem_id.clone(),
                start: e.start,
                end: e.end,
            });
        }
        splices.push(Splice {
            start: e.start,
            end: e.end,
            text: &e.replacement,
            owner: Some(i),
        });
        if let Some(p) = &c.prelude {
            let defined = source.contains(p.text.trim_end()) || preludes.contains(&p.name.as_str());
            if !defined {
                if p.offset > source.len() || !source.is_char_boundary(p.offset) {
                    return Err(RepairError::SpanDrift {
                        problem_id: c.problem_id.clone(),
                        start: p.offset,
                        end: p.offset,
                    });
                }
                preludes.push(&p.name);
                splices.push(Splice {
                    start: p.offset,
                    end: p.offset,
                    text: &p.text,
                    owner: None,
                });
            }
        }
    }
    splices.sort_by_key(|s| (s.start, s.owner.is_some()));
    for w in splices.windows(2) {
        if w[1].start < w[0].end {
            let c = candidates[w[1].owner.or(w[0].owner).unwrap_or(0)];
            return Err(RepairError::SpanDrift {
                problem_id: c.problem_id.clone(),
                start: w[1].start,
                end: w[1].end,
            });
        }
    }
    let mut text = String::with_capacity(source.len() + 256);
    let mut guard_lines = vec![(0, 0); candidates.len()];
    let mut guard_spans = vec![(0, 0); candidates.len()];
    let mut pos = 0;
    for s in &splices {
        text.push_str(&source[pos..s.start]);
        if let Some(i) = s.owner {
            let first = 1 + text.matches('\n').count() as u32;
            let last = first + s.text.matches('\n').count() as u32;
            guard_lines[i] = (first, last);
            guard_spans[i] = (text.len(), text.len() + s.text.len());
        }
        text.push_str(s.text);
        pos = s.end;
    }
    text.push_str(&source[pos..]);
    Ok(Patched {
        text,
        guard_lines,
        guard_spans,
    })
}

/// Apply one candidate; returns the patched text and its diff.
pub fn insert_repair(source: &str, candidate: &RepairCandidate) -> Result<(String, String), RepairError> {
    let patched = apply_candidates(source, &[candidate])?;
    let diff = unified_diff(&candidate.file, source, &patched.text);
    Ok((patched.text, diff))
}

/// Unified diff with `a/` and `b/` file headers.
pub fn unified_diff(file: &str, original: &str, patched: &str) -> String {
    let body = diffy::create_patch(original, patched).to_string();
    let mut lines = body.splitn(3, '\n');
    let (_, _, rest) = (lines.next(), lines.next(), lines.next().unwrap_or(""));
    format!("--- a/{file}\n+++ b/{file}\n{rest}")
}
