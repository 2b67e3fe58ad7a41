pub mod bruteforce;
