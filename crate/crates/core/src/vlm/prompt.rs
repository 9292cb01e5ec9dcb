use crate::format_mhz;
use crate::source::CaptureSettings;

pub const SYSTEM_TEXT: &str = "You are an expert RF signal analyzer. Analyze the spectrogram image provided \
and respond concisely. Do not repeat the question or any preamble. Output your analysis directly and stop when done.";

const USER_TEMPLATE: &str = "Current analyzer settings:
  - Center frequency: {fc} MHz
  - Sample rate: {SR} MHz

Analyze this RF spectrogram and identify any signals present.

Please identify:
  1. Signal type(s)
  2. Estimated bandwidth
  3. Notable characteristics
  4. Confidence level

Provide your analysis in a structured format.";

/// `(system_text, user_text)` for one analysis. Only the center frequency and
/// sample rate of `settings` reach the text.
pub fn build_prompt(settings: &CaptureSettings) -> (String, String) {
    let user = USER_TEMPLATE
        .replace("{fc}", &format_mhz(settings.center_freq_hz))
        .replace("{SR}", &format_mhz(settings.sample_rate_hz));
    (SYSTEM_TEXT.to_string(), user)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_mhz() {
        let (_, u) = build_prompt(&CaptureSettings::new(806e6, 20e6));
        assert!(u.contains("Center frequency: 806 MHz"));
        assert!(u.contains("Sample rate: 20 MHz"));
        let (_, u) = build_prompt(&CaptureSettings::new(433.92e6, 5e6));
        assert!(u.contains("433.92"));
    }

    #[test]
    fn gain_and_fft_size_do_not_leak() {
        let a = build_prompt(&CaptureSettings::new(98e6, 10e6));
        let b = build_prompt(&CaptureSettings::new(98e6, 10e6).with_gain(25.0).with_fft_size(512));
        assert_eq!(a, b);
    }
}
