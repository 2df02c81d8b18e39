/// True iff some gold answer occurs in `answer`, ignoring case.
pub fn accuracy(answer: &str, golds: &[String]) -> bool {
    let answer = answer.to_lowercase();
    golds
        .iter()
        .filter(|g| !g.is_empty())
        .any(|g| answer.contains(&g.to_lowercase()))
}
