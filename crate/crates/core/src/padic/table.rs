//! Defining polynomials of unramified extensions, monic, coefficients low to high.

pub(crate) const UNRAMIFIED: &[(u64, usize, &[u64])] = &[
    (2, 2, &[1, 1, 1]),
    (2, 3, &[1, 1, 0, 1]),
    (2, 4, &[1, 1, 0, 0, 1]),
    (2, 5, &[1, 0, 1, 0, 0, 1]),
    (2, 6, &[1, 1, 0, 0, 0, 0, 1]),
    (3, 2, &[1, 0, 1]),
    (3, 3, &[1, 2, 0, 1]),
    (3, 4, &[2, 1, 0, 0, 1]),
    (3, 5, &[1, 2, 0, 0, 0, 1]),
    (3, 6, &[2, 1, 0, 0, 0, 0, 1]),
    (5, 2, &[2, 0, 1]),
    (5, 3, &[1, 1, 0, 1]),
    (5, 4, &[2, 0, 0, 0, 1]),
    (5, 5, &[1, 4, 0, 0, 0, 1]),
    (5, 6, &[2, 1, 0, 0, 0, 0, 1]),
    (7, 2, &[1, 0, 1]),
    (7, 3, &[2, 0, 0, 1]),
    (7, 4, &[1, 1, 0, 0, 1]),
    (7, 5, &[3, 1, 0, 0, 0, 1]),
    (7, 6, &[2, 0, 0, 0, 0, 0, 1]),
    (11, 2, &[1, 0, 1]),
    (11, 3, &[4, 1, 0, 1]),
    (11, 4, &[2, 1, 0, 0, 1]),
    (11, 5, &[2, 0, 0, 0, 0, 1]),
    (11, 6, &[2, 1, 0, 0, 0, 0, 1]),
    (13, 2, &[2, 0, 1]),
    (13, 3, &[2, 0, 0, 1]),
    (13, 4, &[2, 0, 0, 0, 1]),
    (13, 5, &[2, 4, 0, 0, 0, 1]),
    (13, 6, &[2, 0, 0, 0, 0, 0, 1]),
    (17, 2, &[3, 0, 1]),
    (17, 3, &[3, 1, 0, 1]),
    (17, 4, &[3, 0, 0, 0, 1]),
    (17, 5, &[3, 1, 0, 0, 0, 1]),
    (17, 6, &[7, 1, 0, 0, 0, 0, 1]),
    (19, 2, &[1, 0, 1]),
    (19, 3, &[2, 0, 0, 1]),
    (19, 4, &[8, 1, 0, 0, 1]),
    (19, 5, &[3, 1, 0, 0, 0, 1]),
    (19, 6, &[4, 0, 0, 0, 0, 0, 1]),
    (23, 2, &[1, 0, 1]),
    (23, 3, &[3, 1, 0, 1]),
    (23, 4, &[2, 1, 0, 0, 1]),
    (23, 5, &[3, 1, 0, 0, 0, 1]),
    (23, 6, &[15, 1, 0, 0, 0, 0, 1]),
    (29, 2, &[2, 0, 1]),
    (29, 3, &[4, 1, 0, 1]),
    (29, 4, &[2, 0, 0, 0, 1]),
    (29, 5, &[8, 1, 0, 0, 0, 1]),
    (29, 6, &[3, 1, 0, 0, 0, 0, 1]),
    (31, 2, &[1, 0, 1]),
    (31, 3, &[3, 0, 0, 1]),
    (31, 4, &[1, 1, 0, 0, 1]),
    (31, 5, &[2, 0, 0, 0, 0, 1]),
    (31, 6, &[5, 0, 0, 0, 0, 0, 1]),
    (37, 2, &[2, 0, 1]),
    (37, 3, &[2, 0, 0, 1]),
    (37, 4, &[2, 0, 0, 0, 1]),
    (37, 5, &[5, 1, 0, 0, 0, 1]),
    (41, 2, &[3, 0, 1]),
    (41, 3, &[1, 1, 0, 1]),
    (41, 4, &[3, 0, 0, 0, 1]),
    (41, 5, &[2, 0, 0, 0, 0, 1]),
    (43, 2, &[1, 0, 1]),
    (43, 3, &[3, 0, 0, 1]),
    (43, 4, &[3, 1, 0, 0, 1]),
    (43, 5, &[7, 1, 0, 0, 0, 1]),
    (47, 2, &[1, 0, 1]),
    (47, 3, &[4, 1, 0, 1]),
    (47, 4, &[5, 1, 0, 0, 1]),
    (47, 5, &[3, 1, 0, 0, 0, 1]),
];
