//! Brute-force reference evaluation of the PMV heat balance, written
//! independently of `ceco_core::comfort` (std float methods, no shared
//! helpers).

pub struct Person {
    pub m: f64,
    pub w: f64,
    pub icl: f64,
    pub pa_pa: f64,
}

/// Direct transliteration of the original PMV equations. Vapour pressure in
/// Pa, converted to kPa only inside the clothing-temperature bracket.
pub fn oracle_pmv(person: &Person, ta: f64, tmr: f64, vair: f64, extra_gain: f64) -> f64 {
    let Person { m, w, icl, pa_pa } = *person;
    let net = m - w;
    let pa_kpa = pa_pa / 1000.0;

    let fcl = if icl > 0.078 {
        1.05 + 0.645 * icl
    } else {
        1.00 + 1.29 * icl
    };

    let bracket = net
        - 3.05 * (5.73 - 0.007 * net - pa_kpa)
        - 0.42 * (net - 58.15)
        - 0.0173 * m * (5.87 - pa_kpa)
        - 0.0014 * m * (34.0 - ta);
    let tcl = 35.7 - 0.0275 * net - icl * bracket;

    let natural = 2.38 * (tcl - ta).abs().powf(0.25);
    let forced = 12.1 * vair.sqrt();
    let hc = if natural > forced { natural } else { forced };

    let h = 3.96e-8 * fcl * ((tcl + 273.0).powi(4) - (tmr + 273.0).powi(4)) + fcl * hc * (tcl - ta);
    let sweat = 0.42 * (net - 58.15);
    let ec = 3.05e-3 * (5733.0 - 6.99 * net - pa_pa) + if sweat > 0.0 { sweat } else { 0.0 };
    let cres = 0.0014 * m * (34.0 - ta);
    let eres = 1.7e-5 * m * (5867.0 - pa_pa);

    (0.303 * (-0.036 * m).exp() + 0.028) * ((net + extra_gain) - (h + ec + cres + eres))
}

pub fn default_person() -> Person {
    Person {
        m: 58.15,
        w: 0.0,
        icl: 0.155 * 0.5,
        pa_pa: 1700.0,
    }
}
