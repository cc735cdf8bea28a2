'''
Run the default rate studies (histogram sup-norm, histogram median, Laplace
mixture) and save every output format for each.
'''

import sciris as sc
import supsim as ss

# Set options
do_plot = True
do_save = True
out_dir = sc.path(sc.thisdir())/'results'
formats = ['csv', 'json', 'svg', 'gnuplot']

configs = sc.objdict(
    hist   = ss.make_config('histogram', assertions=dict(slope_range=[-0.43, -0.23])),
    median = ss.make_config('histogram', kind='quantile', tau=0.5, truth='tilted:0.5'),
    dpm    = ss.make_config('dpm-laplace', assertions=dict(decreasing=True)),
)

if __name__ == '__main__':

    T = sc.timer()
    studies = sc.objdict()
    for key, cfg in configs.items():
        sc.heading(f'Running {cfg["study_id"]}...')
        studies[key] = ss.RateStudy(cfg).run()
        T.toctic(key)

    for key, study in studies.items():
        print(f'{study.label}: slope {study.fit.slope:0.4f} ± {study.fit.stderr:0.4f} (target {study.fit.target_exponent:0.4f}); assertions {dict(study.assertions)}')
        if do_save:
            study.emit(formats, out_dir=out_dir)
        if do_plot:
            study.plot(do_show=False, filename=out_dir/f'{study.label}.png' if do_save else None)

    T.toc()
